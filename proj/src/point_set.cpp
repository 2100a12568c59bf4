#include "asbci/point_set.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace asbci {

double distance(const LabeledPoint& a, const LabeledPoint& b) {
    if (a.features.size() != b.features.size())
        throw std::invalid_argument("distance: feature dimensions differ");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.features.size(); ++i) {
        const double d = a.features[i] - b.features[i];
        sum += d * d;
    }
    return std::sqrt(sum);
}

Dataset zscore(const Dataset& dataset) {
    if (dataset.empty()) return {};
    const std::size_t d = dataset.front().features.size();
    std::vector<double> mean(d, 0.0), var(d, 0.0);
    for (const auto& p : dataset) {
        if (p.features.size() != d)
            throw std::invalid_argument("zscore: inconsistent feature dimensions");
        for (std::size_t j = 0; j < d; ++j) mean[j] += p.features[j];
    }
    for (double& m : mean) m /= static_cast<double>(dataset.size());
    for (const auto& p : dataset)
        for (std::size_t j = 0; j < d; ++j) {
            const double c = p.features[j] - mean[j];
            var[j] += c * c;
        }
    for (double& v : var) v /= static_cast<double>(dataset.size());

    Dataset out = dataset;
    for (auto& p : out)
        for (std::size_t j = 0; j < d; ++j) {
            const double s = std::sqrt(var[j]);
            p.features[j] = s > 0.0 ? (p.features[j] - mean[j]) / s
                                    : p.features[j] - mean[j];
        }
    return out;
}

std::vector<double> nearest_neighbor_distances(const Dataset& dataset) {
    if (dataset.size() < 2)
        throw std::invalid_argument("nearest_neighbor_distances: need at least 2 points");
    std::vector<double> out(dataset.size(), std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < dataset.size(); ++i)
        for (std::size_t j = i + 1; j < dataset.size(); ++j) {
            const double d = distance(dataset[i], dataset[j]);
            out[i] = std::min(out[i], d);
            out[j] = std::min(out[j], d);
        }
    return out;
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw std::invalid_argument("quantile: empty input");
    if (q < 0.0 || q > 1.0) throw std::invalid_argument("quantile: q outside [0,1]");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

double percentile(std::vector<double> values, double pct) {
    if (pct < 0.0 || pct > 100.0)
        throw std::invalid_argument("percentile: pct outside [0,100]");
    return quantile(std::move(values), pct / 100.0);
}

std::vector<double> pairwise_distances(const Dataset& dataset) {
    std::vector<double> out;
    out.reserve(dataset.size() * (dataset.size() - 1) / 2);
    for (std::size_t i = 0; i < dataset.size(); ++i)
        for (std::size_t j = i + 1; j < dataset.size(); ++j)
            out.push_back(distance(dataset[i], dataset[j]));
    return out;
}

namespace {

// Dominant eigenvector of the covariance of the centered rows, computed as
// X^T (X v) without forming the covariance matrix. axes_done holds already
// extracted axes to deflate against.
std::vector<double> power_axis(const std::vector<std::vector<double>>& centered,
                               const std::vector<std::vector<double>>& axes_done) {
    const std::size_t dim = centered.empty() ? 0 : centered.front().size();
    std::vector<double> v(dim, 0.0);
    for (std::size_t d = 0; d < dim; ++d)
        v[d] = 1.0 + 0.01 * static_cast<double>(d % 7);

    auto deflate = [&](std::vector<double>& u) {
        for (const auto& axis : axes_done) {
            double dot = 0.0;
            for (std::size_t d = 0; d < dim; ++d) dot += u[d] * axis[d];
            for (std::size_t d = 0; d < dim; ++d) u[d] -= dot * axis[d];
        }
    };
    auto normalize = [&](std::vector<double>& u) {
        double norm = 0.0;
        for (double x : u) norm += x * x;
        norm = std::sqrt(norm);
        if (norm < 1e-300) {
            std::fill(u.begin(), u.end(), 0.0);
            return false;
        }
        for (double& x : u) x /= norm;
        return true;
    };

    deflate(v);
    if (!normalize(v)) return v;
    for (int iter = 0; iter < 200; ++iter) {
        std::vector<double> scores(centered.size(), 0.0);
        for (std::size_t i = 0; i < centered.size(); ++i)
            for (std::size_t d = 0; d < dim; ++d) scores[i] += centered[i][d] * v[d];
        std::vector<double> next(dim, 0.0);
        for (std::size_t i = 0; i < centered.size(); ++i)
            for (std::size_t d = 0; d < dim; ++d) next[d] += scores[i] * centered[i][d];
        deflate(next);
        if (!normalize(next)) return next;
        v = std::move(next);
    }
    return v;
}

}  // namespace

std::vector<std::pair<double, double>> principal_plane(
    const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) return {};
    const std::size_t dim = rows.front().size();
    for (const auto& row : rows) {
        if (row.size() != dim)
            throw std::invalid_argument("principal_plane: ragged row matrix");
    }
    if (dim == 0) return std::vector<std::pair<double, double>>(rows.size(), {0.0, 0.0});

    std::vector<double> mean(dim, 0.0);
    for (const auto& row : rows)
        for (std::size_t d = 0; d < dim; ++d) mean[d] += row[d];
    for (double& m : mean) m /= static_cast<double>(rows.size());

    std::vector<std::vector<double>> centered(rows.size(), std::vector<double>(dim));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t d = 0; d < dim; ++d) centered[i][d] = rows[i][d] - mean[d];

    const std::vector<double> axis1 = power_axis(centered, {});
    const std::vector<double> axis2 = power_axis(centered, {axis1});

    std::vector<std::pair<double, double>> scores(rows.size(), {0.0, 0.0});
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t d = 0; d < dim; ++d) {
            scores[i].first += centered[i][d] * axis1[d];
            scores[i].second += centered[i][d] * axis2[d];
        }
    }
    return scores;
}

}  // namespace asbci
