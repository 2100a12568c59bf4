#include "asbci/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace asbci {

namespace {

// index of the histogram bin [edges[i], edges[i+1]) containing d, with the
// last bin closed on the right; -1 when outside all bins
std::ptrdiff_t bin_of(const std::vector<double>& edges, double d) {
    if (d < edges.front() || d > edges.back()) return -1;
    const auto it = std::upper_bound(edges.begin(), edges.end(), d);
    std::size_t i = static_cast<std::size_t>(it - edges.begin());
    if (i == edges.size()) i = edges.size() - 1;  // d == last edge
    return static_cast<std::ptrdiff_t>(i - 1);
}

}  // namespace

PairCorrelation pair_correlation(const std::vector<ActiveSample>& samples,
                                 const Dataset& dataset,
                                 const std::vector<double>& bins) {
    if (samples.empty()) throw std::invalid_argument("pair_correlation: no samples");
    if (samples.size() < 30)
        throw std::invalid_argument("pair_correlation: need at least 30 samples");
    if (bins.size() < 2)
        throw std::invalid_argument("pair_correlation: need at least 2 bin edges");
    for (std::size_t i = 1; i < bins.size(); ++i)
        if (bins[i] <= bins[i - 1])
            throw std::invalid_argument("pair_correlation: bins must be strictly increasing");
    if (dataset.size() < 2)
        throw std::invalid_argument("pair_correlation: dataset too small");

    const std::size_t nbins = bins.size() - 1;
    const double n = static_cast<double>(dataset.size());

    // expected per-bin counts under uniform sampling without replacement:
    // each dataset pair enters a size-k sample with probability k(k-1)/(n(n-1))
    std::vector<double> population(nbins, 0.0);
    for (std::size_t i = 0; i < dataset.size(); ++i)
        for (std::size_t j = i + 1; j < dataset.size(); ++j) {
            const auto b = bin_of(bins, distance(dataset[i], dataset[j]));
            if (b >= 0) population[static_cast<std::size_t>(b)] += 1.0;
        }

    std::vector<double> observed(nbins, 0.0);
    double expected_scale = 0.0;
    for (const auto& sample : samples) {
        const double k = static_cast<double>(sample.indices.size());
        expected_scale += k * (k - 1.0) / (n * (n - 1.0));
        for (std::size_t i = 0; i < sample.indices.size(); ++i)
            for (std::size_t j = i + 1; j < sample.indices.size(); ++j) {
                const auto b = bin_of(bins, distance(dataset[sample.indices[i]],
                                                     dataset[sample.indices[j]]));
                if (b >= 0) observed[static_cast<std::size_t>(b)] += 1.0;
            }
    }

    PairCorrelation result;
    result.radius_bins = bins;
    result.sample_count = samples.size();
    result.density.resize(nbins, 0.0);
    for (std::size_t b = 0; b < nbins; ++b) {
        const double expected = population[b] * expected_scale;
        result.density[b] = expected > 0.0 ? observed[b] / expected : 0.0;
    }
    return result;
}

GradientStats gradient_variance(
    const std::function<std::vector<double>(const std::vector<std::size_t>&)>& loss_gradient,
    std::size_t dataset_size,
    const std::function<std::vector<std::size_t>(std::size_t)>& sampler,
    std::size_t k, std::size_t repeats) {
    if (repeats < 2) throw std::invalid_argument("gradient_variance: repeats must be >= 2");
    if (k < 1 || k > dataset_size)
        throw std::invalid_argument("gradient_variance: k outside [1, dataset size]");

    std::vector<std::vector<double>> means;
    means.reserve(repeats);
    for (std::size_t r = 0; r < repeats; ++r) {
        const auto batch = sampler(r);
        if (batch.size() != k)
            throw std::invalid_argument("gradient_variance: sampler returned wrong batch size");
        for (const std::size_t id : batch)
            if (id >= dataset_size)
                throw std::invalid_argument("gradient_variance: batch id out of range");
        means.push_back(loss_gradient(batch));
        if (means.back().size() != means.front().size())
            throw std::invalid_argument("gradient_variance: gradient dimension changed");
    }

    const std::size_t p = means.front().size();
    GradientStats stats;
    stats.batch_count = repeats;
    stats.mean_gradient.assign(p, 0.0);
    stats.per_coordinate_variance.assign(p, 0.0);
    for (const auto& m : means)
        for (std::size_t j = 0; j < p; ++j) stats.mean_gradient[j] += m[j];
    for (double& v : stats.mean_gradient) v /= static_cast<double>(repeats);
    for (const auto& m : means)
        for (std::size_t j = 0; j < p; ++j) {
            const double c = m[j] - stats.mean_gradient[j];
            stats.per_coordinate_variance[j] += c * c;
        }
    for (double& v : stats.per_coordinate_variance) v /= static_cast<double>(repeats - 1);
    stats.trace_variance = 0.0;
    for (const double v : stats.per_coordinate_variance) stats.trace_variance += v;
    return stats;
}

}  // namespace asbci
