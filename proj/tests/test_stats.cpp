#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "asbci/stats.hpp"
#include "fixtures.hpp"

using namespace asbci;

namespace {

// Independent brute-force oracle: enumerate all sign assignments over the
// average-ranked nonzero differences and count tail mass for min(W+, W-).
double exact_two_sided_oracle(std::vector<double> diffs) {
    diffs.erase(std::remove(diffs.begin(), diffs.end(), 0.0), diffs.end());
    const std::size_t n = diffs.size();
    REQUIRE(n >= 1);
    REQUIRE(n <= 16);

    std::vector<double> mags(n);
    for (std::size_t i = 0; i < n; ++i) mags[i] = std::abs(diffs[i]);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return mags[x] < mags[y]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && mags[order[j + 1]] == mags[order[i]]) ++j;
        const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }

    double w_plus = 0.0, total = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        if (diffs[k] > 0.0) w_plus += ranks[k];
        total += ranks[k];
    }
    const double observed = std::min(w_plus, total - w_plus);

    std::size_t at_most = 0;
    const std::size_t combos = std::size_t{1} << n;
    for (std::size_t mask = 0; mask < combos; ++mask) {
        double wp = 0.0;
        for (std::size_t k = 0; k < n; ++k)
            if (mask & (std::size_t{1} << k)) wp += ranks[k];
        const double w = std::min(wp, total - wp);
        if (w <= observed + 1e-9) ++at_most;
    }
    return std::min(1.0, static_cast<double>(at_most) / static_cast<double>(combos));
}

using fixtures::kTimingFull;
using fixtures::kTimingReduced;

}  // namespace

TEST_CASE("signed-rank test flags degenerate inputs") {
    CHECK_THROWS_AS(wilcoxon_signed_rank({}, {}), std::invalid_argument);
    CHECK_THROWS_AS(wilcoxon_signed_rank({1.0, 2.0}, {1.0}), std::invalid_argument);

    const auto result = wilcoxon_signed_rank({3.0, 4.0, 5.0}, {3.0, 4.0, 5.0});
    CHECK(result.degenerate);
    CHECK(result.n_effective == 0);
    CHECK(result.p_two_sided == 1.0);
}

TEST_CASE("six uniformly positive differences give the floor p-value") {
    const std::vector<double> a = {5.0, 6.0, 7.0, 8.0, 9.0, 10.0};
    const std::vector<double> b = {1.0, 2.0, 3.0, 3.5, 4.0, 4.5};
    const auto result = wilcoxon_signed_rank(a, b, WilcoxonMethod::Exact);
    CHECK(result.statistic == 0.0);
    CHECK(result.n_effective == 6);
    CHECK(result.p_two_sided == doctest::Approx(2.0 / 64.0).epsilon(1e-12));
    CHECK(wilcoxon_one_sided_p(a, b, WilcoxonMethod::Exact) ==
          doctest::Approx(1.0 / 64.0).epsilon(1e-12));
}

TEST_CASE("zero differences are dropped before ranking") {
    const std::vector<double> a = {4.0, 2.0, 9.0, 7.0, 1.0, 8.0, 3.0};
    std::vector<double> b = {1.0, 2.0, 4.0, 3.0, 1.0, 2.0, 3.0};  // two exact ties
    const auto result = wilcoxon_signed_rank(a, b, WilcoxonMethod::Exact);
    CHECK(result.n_effective == 4);

    std::vector<double> diffs;
    for (std::size_t i = 0; i < a.size(); ++i) diffs.push_back(a[i] - b[i]);
    CHECK(result.p_two_sided == doctest::Approx(exact_two_sided_oracle(diffs)).epsilon(1e-12));
}

TEST_CASE("exact p-values match brute-force enumeration across sign patterns") {
    // deterministic magnitude pool with repeats to exercise average ranks
    const std::vector<double> mags = {1.5, 2.0, 2.0, 3.25, 4.0, 4.0, 4.0, 5.5, 6.0, 7.25};
    for (std::size_t n : {4, 7, 10}) {
        const std::size_t combos = std::size_t{1} << n;
        for (std::size_t mask = 0; mask < combos; mask += 3) {  // stride keeps it quick
            std::vector<double> a(n, 0.0), b(n, 0.0);
            bool any = false;
            for (std::size_t k = 0; k < n; ++k) {
                const double d = (mask & (std::size_t{1} << k)) ? mags[k] : -mags[k];
                a[k] = d;
                any = true;
            }
            REQUIRE(any);
            const auto result = wilcoxon_signed_rank(a, b, WilcoxonMethod::Exact);
            std::vector<double> diffs = a;
            const double oracle = exact_two_sided_oracle(diffs);
            CHECK(result.p_two_sided == doctest::Approx(oracle).epsilon(1e-10));
        }
    }
}

TEST_CASE("seventeen positive training-time reductions hit the exact floor") {
    REQUIRE(kTimingFull.size() == 17);
    REQUIRE(kTimingReduced.size() == 17);
    const auto result =
        wilcoxon_signed_rank(kTimingFull, kTimingReduced, WilcoxonMethod::Exact);
    CHECK(result.statistic == 0.0);
    CHECK(result.n_effective == 17);
    // all 17 differences share one sign: p = 2 / 2^17
    CHECK(result.p_two_sided == doctest::Approx(1.52587890625e-05).epsilon(1e-12));
    CHECK(result.p_two_sided < 0.05);
}

TEST_CASE("the test is symmetric in its arguments") {
    const std::vector<double> a = {3.1, 4.5, 2.2, 8.8, 7.7, 1.1, 6.6, 5.5};
    const std::vector<double> b = {2.9, 5.0, 2.8, 6.6, 7.9, 1.5, 5.5, 5.0};
    const auto ab = wilcoxon_signed_rank(a, b, WilcoxonMethod::Exact);
    const auto ba = wilcoxon_signed_rank(b, a, WilcoxonMethod::Exact);
    CHECK(ab.statistic == ba.statistic);
    CHECK(ab.p_two_sided == doctest::Approx(ba.p_two_sided).epsilon(1e-12));
}

TEST_CASE("the normal approximation tracks the exact tail for moderate n") {
    std::vector<double> a, b;
    for (int i = 0; i < 14; ++i) {
        a.push_back(static_cast<double>(i) + ((i % 3 == 0) ? 2.0 : 0.4));
        b.push_back(static_cast<double>(i) + ((i % 4 == 0) ? 1.1 : -0.3));
    }
    const auto exact = wilcoxon_signed_rank(a, b, WilcoxonMethod::Exact);
    const auto normal = wilcoxon_signed_rank(a, b, WilcoxonMethod::Normal);
    CHECK(exact.statistic == normal.statistic);
    CHECK(normal.p_two_sided > 0.0);
    CHECK(normal.p_two_sided <= 1.0);
    CHECK(std::abs(exact.p_two_sided - normal.p_two_sided) < 0.03);

    // Auto switches to enumeration at small n and the approximation above 12
    const auto auto_small = wilcoxon_signed_rank({1, 2, 3, 4, 5, 6}, {0, 0, 0, 0, 0, 0});
    const auto exact_small =
        wilcoxon_signed_rank({1, 2, 3, 4, 5, 6}, {0, 0, 0, 0, 0, 0}, WilcoxonMethod::Exact);
    CHECK(auto_small.p_two_sided == doctest::Approx(exact_small.p_two_sided).epsilon(1e-12));
    const auto auto_large = wilcoxon_signed_rank(a, b);
    CHECK(auto_large.p_two_sided == doctest::Approx(normal.p_two_sided).epsilon(1e-12));
}

TEST_CASE("bitrate reproduces its closed form and limits") {
    CHECK(bitrate(1.0, 6) == doctest::Approx(std::log2(6.0)).epsilon(1e-12));
    CHECK(bitrate(1.0 / 6.0, 6) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(bitrate(0.0, 2) == doctest::Approx(1.0).epsilon(1e-12));  // always-wrong binary flips

    const double p = 0.9;
    const double expected = std::log2(6.0) + p * std::log2(p) +
                            (1.0 - p) * std::log2((1.0 - p) / 5.0);
    CHECK(bitrate(p, 6) == doctest::Approx(expected).epsilon(1e-12));

    CHECK_THROWS_AS(bitrate(-0.1, 6), std::invalid_argument);
    CHECK_THROWS_AS(bitrate(1.1, 6), std::invalid_argument);
    CHECK_THROWS_AS(bitrate(0.5, 1), std::invalid_argument);
}

TEST_CASE("bitrate grows with accuracy above chance") {
    double previous = bitrate(1.0 / 6.0, 6);
    for (int i = 1; i <= 100; ++i) {
        const double p =
            std::min(1.0, 1.0 / 6.0 + (1.0 - 1.0 / 6.0) * static_cast<double>(i) / 100.0);
        const double current = bitrate(p, 6);
        CHECK(current > previous);
        previous = current;
    }
}

TEST_CASE("bitrate curves convert bits per decision to bits per minute") {
    BitrateCurve curve;
    curve.blocks = {1, 2, 4};
    curve.accuracy = {1.0, 1.0, 1.0};
    curve.seconds_per_block = 1.93;
    curve.class_count = 6;
    const auto bpm = bitrate_curve(curve);
    REQUIRE(bpm.size() == 3);
    CHECK(bpm[0] == doctest::Approx(std::log2(6.0) * 60.0 / 1.93).epsilon(1e-12));
    // doubling the repetitions at equal accuracy halves the rate
    CHECK(bpm[1] == doctest::Approx(bpm[0] / 2.0).epsilon(1e-12));
    CHECK(bpm[2] == doctest::Approx(bpm[0] / 4.0).epsilon(1e-12));

    curve.accuracy = {1.0, 1.0};
    CHECK_THROWS_AS(bitrate_curve(curve), std::invalid_argument);
    curve.accuracy = {1.0, 1.0, 1.0};
    curve.blocks = {0, 2, 4};
    CHECK_THROWS_AS(bitrate_curve(curve), std::invalid_argument);
}

TEST_CASE("aggregation computes column statistics under both conventions") {
    const std::vector<std::string> columns = {"x", "y"};
    const std::vector<std::string> labels = {"r1", "r2", "r3"};
    const std::vector<std::vector<double>> rows = {{2.0, 10.0}, {4.0, 10.0}, {6.0, 10.0}};

    const SummaryTable pop = aggregate(columns, labels, rows, StdConvention::Population);
    CHECK(pop.mean_row[0] == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(pop.mean_row[1] == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(pop.std_row[0] == doctest::Approx(std::sqrt(8.0 / 3.0)).epsilon(1e-12));
    CHECK(pop.std_row[1] == doctest::Approx(0.0).epsilon(1e-12));

    const SummaryTable sam = aggregate(columns, labels, rows, StdConvention::Sample);
    CHECK(sam.std_row[0] == doctest::Approx(2.0).epsilon(1e-12));

    // NaN gaps are skipped, not propagated
    const std::vector<std::vector<double>> gappy = {
        {1.0, std::numeric_limits<double>::quiet_NaN()}, {3.0, 8.0}};
    const SummaryTable gap = aggregate(columns, {"r1", "r2"}, gappy);
    CHECK(gap.mean_row[0] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(gap.mean_row[1] == doctest::Approx(8.0).epsilon(1e-12));
    CHECK(gap.std_row[1] == doctest::Approx(0.0).epsilon(1e-12));

    CHECK_THROWS_AS(aggregate(columns, labels, {{1.0}}), std::invalid_argument);
}

TEST_CASE("timing columns aggregate to the published means and deviations") {
    const SummaryTable table =
        aggregate({"full", "reduced"}, std::vector<std::string>(17, "s"),
                  [&] {
                      std::vector<std::vector<double>> rows;
                      for (std::size_t i = 0; i < 17; ++i)
                          rows.push_back({kTimingFull[i], kTimingReduced[i]});
                      return rows;
                  }(),
                  StdConvention::Sample);
    CHECK(table.mean_row[0] == doctest::Approx(22896.44).epsilon(5e-6));
    CHECK(table.mean_row[1] == doctest::Approx(8889.75).epsilon(5e-6));
    CHECK(std::abs(table.std_row[0] - 1292.02) < 0.01);
    CHECK(std::abs(table.std_row[1] - 419.14) < 0.01);

    // the reduction itself: about 61 percent of the training time disappears
    const double cut = 1.0 - table.mean_row[1] / table.mean_row[0];
    CHECK(cut > 0.5);
}

TEST_CASE("accuracy columns aggregate to the published summary rows") {
    std::vector<std::vector<double>> rows;
    for (const auto& r : fixtures::kAccuracyRows)
        rows.emplace_back(r.begin(), r.end());
    const SummaryTable table =
        aggregate(std::vector<std::string>(12, "c"), fixtures::kAccuracySubjects, rows,
                  StdConvention::Sample);
    for (std::size_t c = 0; c < 12; ++c) {
        CHECK(std::abs(table.mean_row[c] - fixtures::kAccuracyMean[c]) < 0.01);
        CHECK(std::abs(table.std_row[c] - fixtures::kAccuracyStd[c]) < 0.01);
    }
}

TEST_CASE("summary csv carries the convention header and footer rows") {
    const SummaryTable table = aggregate({"a", "b"}, {"r1", "r2"},
                                         {{1.0, 2.0}, {3.0, 4.0}},
                                         StdConvention::Sample);
    std::ostringstream out;
    write_summary_csv(out, table, "subject");
    const std::string text = out.str();
    CHECK(text.rfind("# std_convention=sample", 0) == 0);
    CHECK(text.find("subject,a,b") != std::string::npos);
    CHECK(text.find("Mean,") != std::string::npos);
    CHECK(text.find("Std.dev,") != std::string::npos);
}
