#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace asbci {

enum class WilcoxonMethod { Auto, Exact, Normal };

struct WilcoxonResult {
    double statistic = 0.0;   // min(W+, W-)
    double p_two_sided = 1.0;
    std::size_t n_effective = 0;
    bool degenerate = false;  // all paired differences were zero
};

// Paired signed-rank test. Zero differences are dropped; tied absolute
// differences receive average ranks. Auto uses exact enumeration up to
// n_effective = 12 and the tie-corrected normal approximation with
// continuity correction above.
WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a,
                                    const std::vector<double>& b,
                                    WilcoxonMethod method = WilcoxonMethod::Auto);

// One-sided p-value for the observed direction (half the two-sided tail).
double wilcoxon_one_sided_p(const std::vector<double>& a, const std::vector<double>& b,
                            WilcoxonMethod method = WilcoxonMethod::Auto);

// Bits per decision for accuracy p over class_count choices, with the
// p -> 0 and p -> 1 limits taken analytically.
double bitrate(double p, int class_count);

struct BitrateCurve {
    std::vector<int> blocks;        // decision repetitions
    std::vector<double> accuracy;   // in [0, 1]
    double seconds_per_block = 1.0;
    int class_count = 2;
};

// bits/min at entry i = bitrate(accuracy[i]) * 60 / (blocks[i] * seconds_per_block)
std::vector<double> bitrate_curve(const BitrateCurve& curve);

enum class StdConvention { Population, Sample };

struct SummaryTable {
    std::vector<std::string> columns;
    std::vector<std::string> row_labels;
    std::vector<std::vector<double>> rows;  // row-major, may contain NaN gaps
    std::vector<double> mean_row;
    std::vector<double> std_row;
    StdConvention convention = StdConvention::Population;
};

// Column-wise unweighted mean and standard deviation, skipping NaN cells.
SummaryTable aggregate(std::vector<std::string> columns, std::vector<std::string> row_labels,
                       std::vector<std::vector<double>> rows,
                       StdConvention convention = StdConvention::Population);

// Emits the table with Mean and Std.dev footer rows; the header records the
// std convention.
void write_summary_csv(std::ostream& out, const SummaryTable& table,
                       const std::string& label_column = "subject");

}  // namespace asbci
