#include "asbci/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace asbci {

namespace {

struct RankedDiffs {
    std::vector<double> ranks;   // average ranks of |d|, aligned with signs
    std::vector<int> signs;      // +1 or -1
    double w_plus = 0.0, w_minus = 0.0;
};

RankedDiffs rank_differences(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("wilcoxon: paired vectors must have equal length");
    if (a.empty()) throw std::invalid_argument("wilcoxon: empty input");

    std::vector<double> diffs;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        if (d != 0.0) diffs.push_back(d);
    }
    RankedDiffs out;
    if (diffs.empty()) return out;

    std::vector<std::size_t> order(diffs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        return std::abs(diffs[x]) < std::abs(diffs[y]);
    });

    out.ranks.resize(diffs.size());
    out.signs.resize(diffs.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() &&
               std::abs(diffs[order[j + 1]]) == std::abs(diffs[order[i]]))
            ++j;
        const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t t = i; t <= j; ++t) out.ranks[order[t]] = avg_rank;
        i = j + 1;
    }
    for (std::size_t t = 0; t < diffs.size(); ++t) {
        out.signs[t] = diffs[t] > 0.0 ? 1 : -1;
        if (diffs[t] > 0.0)
            out.w_plus += out.ranks[t];
        else
            out.w_minus += out.ranks[t];
    }
    return out;
}

// exact tail probabilities of W+ by counting sign assignments; doubled
// ranks are integers, so the distribution is a polynomial with 2^n total
// mass, computed by dynamic programming
std::pair<double, double> exact_tails(const std::vector<double>& ranks, double w_plus) {
    if (ranks.size() > 62)
        throw std::invalid_argument("wilcoxon: exact enumeration limited to n <= 62");
    std::vector<long long> doubled;
    long long total = 0;
    for (const double r : ranks) {
        const auto d = static_cast<long long>(std::llround(2.0 * r));
        doubled.push_back(d);
        total += d;
    }
    std::vector<std::uint64_t> count(static_cast<std::size_t>(total) + 1, 0);
    count[0] = 1;
    long long reached = 0;
    for (const long long d : doubled) {
        for (long long s = reached; s >= 0; --s)
            if (count[static_cast<std::size_t>(s)])
                count[static_cast<std::size_t>(s + d)] += count[static_cast<std::size_t>(s)];
        reached += d;
    }
    const auto w2 = static_cast<long long>(std::llround(2.0 * w_plus));
    std::uint64_t le = 0, ge = 0;
    for (long long s = 0; s <= total; ++s) {
        if (s <= w2) le += count[static_cast<std::size_t>(s)];
        if (s >= w2) ge += count[static_cast<std::size_t>(s)];
    }
    const double denom = std::pow(2.0, static_cast<double>(ranks.size()));
    return {static_cast<double>(le) / denom, static_cast<double>(ge) / denom};
}

std::pair<double, double> normal_tails(const std::vector<double>& ranks, double w_plus) {
    const double n = static_cast<double>(ranks.size());
    const double mu = n * (n + 1.0) / 4.0;
    double tie_term = 0.0;
    std::vector<double> sorted = ranks;
    std::sort(sorted.begin(), sorted.end());
    std::size_t i = 0;
    while (i < sorted.size()) {
        std::size_t j = i;
        while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
        const double t = static_cast<double>(j - i + 1);
        tie_term += t * t * t - t;
        i = j + 1;
    }
    const double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    if (var <= 0.0) return {1.0, 1.0};
    const double sd = std::sqrt(var);
    // continuity correction pulls each tail toward the mean
    const double z_le = (w_plus - mu + 0.5) / sd;
    const double z_ge = (w_plus - mu - 0.5) / sd;
    const double p_le = 0.5 * std::erfc(-z_le / std::sqrt(2.0));
    const double p_ge = 0.5 * std::erfc(z_ge / std::sqrt(2.0));
    return {p_le, p_ge};
}

std::pair<double, double> tails(const RankedDiffs& rd, WilcoxonMethod method) {
    const bool exact = method == WilcoxonMethod::Exact ||
                       (method == WilcoxonMethod::Auto && rd.ranks.size() <= 12);
    return exact ? exact_tails(rd.ranks, rd.w_plus) : normal_tails(rd.ranks, rd.w_plus);
}

}  // namespace

WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a,
                                    const std::vector<double>& b, WilcoxonMethod method) {
    const auto rd = rank_differences(a, b);
    WilcoxonResult result;
    result.n_effective = rd.ranks.size();
    if (rd.ranks.empty()) {
        result.degenerate = true;
        return result;
    }
    result.statistic = std::min(rd.w_plus, rd.w_minus);
    const auto [p_le, p_ge] = tails(rd, method);
    result.p_two_sided = std::min(1.0, 2.0 * std::min(p_le, p_ge));
    return result;
}

double wilcoxon_one_sided_p(const std::vector<double>& a, const std::vector<double>& b,
                            WilcoxonMethod method) {
    const auto rd = rank_differences(a, b);
    if (rd.ranks.empty()) return 1.0;
    const auto [p_le, p_ge] = tails(rd, method);
    return std::min(1.0, std::min(p_le, p_ge));
}

double bitrate(double p, int class_count) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("bitrate: p outside [0,1]");
    if (class_count < 2) throw std::invalid_argument("bitrate: class_count must be >= 2");
    const double n = static_cast<double>(class_count);
    double bits = std::log2(n);
    if (p > 0.0) bits += p * std::log2(p);
    if (p < 1.0) bits += (1.0 - p) * std::log2((1.0 - p) / (n - 1.0));
    return bits;
}

std::vector<double> bitrate_curve(const BitrateCurve& curve) {
    if (curve.blocks.size() != curve.accuracy.size())
        throw std::invalid_argument("bitrate_curve: blocks and accuracy lengths differ");
    if (curve.seconds_per_block <= 0.0)
        throw std::invalid_argument("bitrate_curve: seconds_per_block must be > 0");
    std::vector<double> out;
    out.reserve(curve.blocks.size());
    for (std::size_t i = 0; i < curve.blocks.size(); ++i) {
        if (curve.blocks[i] < 1)
            throw std::invalid_argument("bitrate_curve: blocks must be >= 1");
        const double per_decision = bitrate(curve.accuracy[i], curve.class_count);
        out.push_back(per_decision * 60.0 /
                      (static_cast<double>(curve.blocks[i]) * curve.seconds_per_block));
    }
    return out;
}

SummaryTable aggregate(std::vector<std::string> columns, std::vector<std::string> row_labels,
                       std::vector<std::vector<double>> rows, StdConvention convention) {
    if (rows.size() != row_labels.size())
        throw std::invalid_argument("aggregate: row label count mismatch");
    for (const auto& row : rows)
        if (row.size() != columns.size())
            throw std::invalid_argument("aggregate: row width does not match the columns");

    SummaryTable table;
    table.columns = std::move(columns);
    table.row_labels = std::move(row_labels);
    table.rows = std::move(rows);
    table.convention = convention;
    table.mean_row.assign(table.columns.size(), std::nan(""));
    table.std_row.assign(table.columns.size(), std::nan(""));

    for (std::size_t c = 0; c < table.columns.size(); ++c) {
        std::vector<double> cells;
        for (const auto& row : table.rows)
            if (!std::isnan(row[c])) cells.push_back(row[c]);
        if (cells.empty()) continue;
        double mean = 0.0;
        for (const double v : cells) mean += v;
        mean /= static_cast<double>(cells.size());
        table.mean_row[c] = mean;
        double ss = 0.0;
        for (const double v : cells) ss += (v - mean) * (v - mean);
        if (convention == StdConvention::Population)
            table.std_row[c] = std::sqrt(ss / static_cast<double>(cells.size()));
        else
            table.std_row[c] =
                cells.size() > 1 ? std::sqrt(ss / static_cast<double>(cells.size() - 1)) : 0.0;
    }
    return table;
}

void write_summary_csv(std::ostream& out, const SummaryTable& table,
                       const std::string& label_column) {
    out << "# std_convention="
        << (table.convention == StdConvention::Population ? "population" : "sample") << "\n";
    out << label_column;
    for (const auto& c : table.columns) out << "," << c;
    out << "\n";
    out.precision(10);
    const auto put_row = [&](const std::string& label, const std::vector<double>& row) {
        out << label;
        for (const double v : row) {
            out << ",";
            if (!std::isnan(v)) out << v;
        }
        out << "\n";
    };
    for (std::size_t r = 0; r < table.rows.size(); ++r)
        put_row(table.row_labels[r], table.rows[r]);
    put_row("Mean", table.mean_row);
    put_row("Std.dev", table.std_row);
}

}  // namespace asbci
