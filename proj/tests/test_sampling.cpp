#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "asbci/rng.hpp"
#include "asbci/sampling.hpp"

using namespace asbci;

namespace {

Dataset grid_checkerboard(std::size_t side) {
    Dataset ds;
    for (std::size_t y = 0; y < side; ++y) {
        for (std::size_t x = 0; x < side; ++x) {
            LabeledPoint p;
            p.id = ds.size();
            p.features = {static_cast<double>(x), static_cast<double>(y)};
            p.label = static_cast<int>((x + y) % 2);
            ds.push_back(std::move(p));
        }
    }
    return ds;
}

Dataset uniform_square(std::size_t n, std::uint64_t seed, double side = 1.0) {
    Rng rng(seed);
    Dataset ds;
    for (std::size_t i = 0; i < n; ++i) {
        LabeledPoint p;
        p.id = i;
        p.features = {rng.next_uniform(0.0, side), rng.next_uniform(0.0, side)};
        p.label = static_cast<int>(i % 2);
        ds.push_back(std::move(p));
    }
    return ds;
}

// Exhaustive reference: sort all other points by (distance, id), count
// differing labels among the first k.
double mingling_oracle(const Dataset& ds, std::size_t index, std::size_t k) {
    std::vector<std::pair<double, std::size_t>> order;
    for (std::size_t j = 0; j < ds.size(); ++j) {
        if (j == index) continue;
        order.emplace_back(distance(ds[index], ds[j]), ds[j].id);
    }
    std::sort(order.begin(), order.end());
    std::size_t differing = 0;
    for (std::size_t r = 0; r < k; ++r)
        if (ds[order[r].second].label != ds[index].label) ++differing;
    return static_cast<double>(differing) / static_cast<double>(k);
}

double min_pairwise(const Dataset& ds, const std::vector<std::size_t>& indices) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < indices.size(); ++i)
        for (std::size_t j = i + 1; j < indices.size(); ++j)
            best = std::min(best, distance(ds[indices[i]], ds[indices[j]]));
    return best;
}

}  // namespace

TEST_CASE("mingling index is 0 in a homogeneous neighborhood") {
    Dataset ds;
    for (int i = 0; i < 6; ++i) {
        LabeledPoint p;
        p.id = static_cast<std::size_t>(i);
        p.features = {static_cast<double>(i) * 0.1};
        p.label = 0;
        ds.push_back(p);
    }
    CHECK(mingling_index(ds[0], ds, 5) == 0.0);
}

TEST_CASE("mingling index is 1 when all neighbors differ") {
    Dataset ds;
    for (int i = 0; i < 6; ++i) {
        LabeledPoint p;
        p.id = static_cast<std::size_t>(i);
        p.features = {static_cast<double>(i) * 0.1};
        p.label = i == 0 ? 0 : 1;
        ds.push_back(p);
    }
    CHECK(mingling_index(ds[0], ds, 5) == 1.0);
}

TEST_CASE("mingling index matches exhaustive enumeration on a 12-point set") {
    Rng rng(11);
    Dataset ds;
    for (std::size_t i = 0; i < 12; ++i) {
        LabeledPoint p;
        p.id = i;
        p.features = {rng.next_uniform(0.0, 1.0), rng.next_uniform(0.0, 1.0)};
        p.label = static_cast<int>(i % 3 == 0);
        ds.push_back(p);
    }
    bool saw_half = false;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const double expected = mingling_oracle(ds, i, 4);
        CHECK(mingling_index(ds[i], ds, 4) == doctest::Approx(expected));
        if (expected == 0.5) saw_half = true;
    }
    CHECK(saw_half);  // the fixture includes a half-mixed neighborhood
}

TEST_CASE("mingling index needs enough other points") {
    Dataset ds;
    for (std::size_t i = 0; i < 4; ++i) {
        LabeledPoint p;
        p.id = i;
        p.features = {static_cast<double>(i)};
        ds.push_back(p);
    }
    CHECK_THROWS_AS(mingling_index(ds[0], ds, 5), std::invalid_argument);
}

TEST_CASE("stratify puts separated pure clusters entirely in level 0") {
    Dataset ds;
    for (std::size_t i = 0; i < 8; ++i) {
        LabeledPoint p;
        p.id = i;
        const double offset = i < 4 ? 0.0 : 100.0;
        p.features = {offset + static_cast<double>(i % 4)};
        p.label = i < 4 ? 0 : 1;
        ds.push_back(p);
    }
    const auto levels = stratify_by_mingling(ds, 3, 4);
    CHECK(levels[0].size() == 8);
    for (std::size_t j = 1; j < levels.size(); ++j) CHECK(levels[j].empty());
}

TEST_CASE("stratify partitions every id exactly once") {
    const Dataset ds = uniform_square(10, 21);
    const auto levels = stratify_by_mingling(ds, 2, 3);
    std::set<std::size_t> seen;
    std::size_t total = 0;
    for (const auto& level : levels) {
        for (std::size_t id : level) {
            CHECK(seen.insert(id).second);
            ++total;
        }
    }
    CHECK(total == 10);
}

TEST_CASE("stratify level occupancies match per-point enumeration on a checkerboard") {
    const Dataset ds = grid_checkerboard(6);
    const std::size_t k = 4;
    const auto levels = stratify_by_mingling(ds, k, k + 1);

    std::vector<std::size_t> expected(k + 1, 0);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const double m = mingling_oracle(ds, i, k);
        expected[static_cast<std::size_t>(std::llround(m * static_cast<double>(k)))]++;
    }
    for (std::size_t j = 0; j <= k; ++j) CHECK(levels[j].size() == expected[j]);
}

TEST_CASE("stratify rejects a level count other than neighbor_count + 1") {
    const Dataset ds = uniform_square(10, 3);
    CHECK_THROWS_AS(stratify_by_mingling(ds, 2, 4), std::invalid_argument);
}

TEST_CASE("dense draw of a single point has infinite min pair distance") {
    const Dataset ds = uniform_square(20, 5);
    PdsParams params;
    params.target_count = 1;
    params.rejection_radius = 0.1;
    params.neighbor_count = 3;
    params.level_weights = {0.25, 0.25, 0.25, 0.25};
    params.seed = 9;
    const auto sample = dense_pds(ds, params);
    REQUIRE(sample.indices.size() == 1);
    CHECK(std::isinf(sample.min_pair_distance));
}

TEST_CASE("three close points cannot yield two at radius 0.2") {
    Dataset ds;
    for (std::size_t i = 0; i < 3; ++i) {
        LabeledPoint p;
        p.id = i;
        p.features = {0.03 * static_cast<double>(i), 0.0};
        p.label = static_cast<int>(i % 2);
        ds.push_back(p);
    }
    PdsParams params;
    params.target_count = 2;
    params.rejection_radius = 0.2;
    params.neighbor_count = 2;
    params.level_weights = {1.0 / 3, 1.0 / 3, 1.0 / 3};
    params.max_attempts = 100;
    params.seed = 4;

    for (int which = 0; which < 2; ++which) {
        try {
            if (which == 0)
                dense_pds(ds, params);
            else
                vanilla_pds(ds, params);
            FAIL("expected infeasibility");
        } catch (const SampleInfeasibleError& e) {
            CHECK(e.attempts_used == 100);
            CHECK(e.partial_count == 1);
        }
    }
}

TEST_CASE("checkerboard grid draw keeps every pair beyond the radius") {
    const Dataset ds = grid_checkerboard(10);
    PdsParams params;
    params.target_count = 30;
    params.rejection_radius = 0.5;
    params.neighbor_count = 4;
    params.level_weights = {0.2, 0.2, 0.2, 0.2, 0.2};
    params.max_attempts = 100000;
    params.seed = 17;

    const auto dense = dense_pds(ds, params);
    REQUIRE(dense.indices.size() == 30);
    CHECK(min_pairwise(ds, dense.indices) > 0.5);
    CHECK(dense.min_pair_distance > 0.5);

    const auto vanilla = vanilla_pds(ds, params);
    REQUIRE(vanilla.indices.size() == 30);
    CHECK(min_pairwise(ds, vanilla.indices) > 0.5);
}

TEST_CASE("identical seed reproduces the draw, a different seed changes it") {
    const Dataset ds = uniform_square(200, 33);
    PdsParams params;
    params.target_count = 40;
    params.rejection_radius = 0.02;
    params.neighbor_count = 5;
    params.level_weights = std::vector<double>(6, 1.0 / 6.0);
    params.max_attempts = 100000;
    params.seed = 12;

    const auto a = dense_pds(ds, params);
    const auto b = dense_pds(ds, params);
    CHECK(a.indices == b.indices);

    params.seed = 13;
    const auto c = dense_pds(ds, params);
    CHECK(a.indices != c.indices);
}

TEST_CASE("mass on an empty mingling level is renormalized away") {
    // Two far-apart pure clusters: every point sits at level 0, yet the
    // weights put almost all mass on the top level.
    Dataset ds;
    for (std::size_t i = 0; i < 20; ++i) {
        LabeledPoint p;
        p.id = i;
        const double offset = i < 10 ? 0.0 : 1000.0;
        p.features = {offset + static_cast<double>(i % 10), 0.0};
        p.label = i < 10 ? 0 : 1;
        ds.push_back(p);
    }
    PdsParams params;
    params.target_count = 6;
    params.rejection_radius = 0.5;
    params.neighbor_count = 3;
    params.level_weights = {0.01, 0.0, 0.0, 0.99};
    params.max_attempts = 5000;
    params.seed = 2;
    const auto sample = dense_pds(ds, params);
    CHECK(sample.indices.size() == 6);
}

TEST_CASE("vanilla draw at radius 0 matches dataset label proportions") {
    // 120 of label 1, 280 of label 0; k = 20 without replacement
    Dataset ds;
    Rng rng(55);
    for (std::size_t i = 0; i < 400; ++i) {
        LabeledPoint p;
        p.id = i;
        p.features = {rng.next_uniform(0.0, 1.0), rng.next_uniform(0.0, 1.0)};
        p.label = i < 120 ? 1 : 0;
        ds.push_back(p);
    }
    PdsParams params;
    params.target_count = 20;
    params.rejection_radius = 0.0;
    params.neighbor_count = 5;
    params.max_attempts = 10000;

    const double p1 = 120.0 / 400.0;
    const std::size_t runs = 1000;
    std::size_t ones = 0;
    for (std::size_t r = 0; r < runs; ++r) {
        params.seed = 1000 + r;
        const auto sample = vanilla_pds(ds, params);
        for (std::size_t idx : sample.indices) ones += static_cast<std::size_t>(ds[idx].label);
    }
    const double total = static_cast<double>(runs * params.target_count);
    const double observed = static_cast<double>(ones) / total;
    // hypergeometric draws are tighter than binomial; 3 sigma on the
    // binomial bound is conservative
    const double sigma = std::sqrt(p1 * (1.0 - p1) / total);
    CHECK(std::abs(observed - p1) < 3.0 * sigma);
}

TEST_CASE("distance evaluations grow quadratically in the sample size") {
    const Dataset ds = uniform_square(400, 77, 10.0);
    PdsParams params;
    params.rejection_radius = 1e-9;  // never rejects, isolating the pair scans
    params.neighbor_count = 5;
    params.level_weights = std::vector<double>(6, 1.0 / 6.0);
    params.max_attempts = 1000000;
    params.seed = 3;

    SampleTrace small_trace, big_trace;
    params.target_count = 40;
    dense_pds(ds, params, &small_trace);
    params.target_count = 80;
    dense_pds(ds, params, &big_trace);

    const double ratio = static_cast<double>(big_trace.distance_evaluations) /
                         static_cast<double>(small_trace.distance_evaluations);
    CHECK(ratio >= 3.0);
    CHECK(ratio <= 5.0);
}

TEST_CASE("level weights must sum to one") {
    const Dataset ds = uniform_square(30, 8);
    PdsParams params;
    params.target_count = 5;
    params.rejection_radius = 0.01;
    params.neighbor_count = 2;
    params.level_weights = {0.5, 0.2, 0.2};
    params.seed = 1;
    CHECK_THROWS_AS(dense_pds(ds, params), std::invalid_argument);
}

TEST_CASE("default rejection radius is the nearest-neighbor distance quantile") {
    const Dataset ds = uniform_square(100, 91);
    const auto nn = nearest_neighbor_distances(ds);
    CHECK(default_rejection_radius(ds) == doctest::Approx(quantile(nn, 0.10)));
    CHECK(default_rejection_radius(ds, 0.2) == doctest::Approx(quantile(nn, 0.20)));
}

TEST_CASE("radius backoff halves until the draw becomes feasible") {
    // unit-spaced grid: radius 60 is hopeless, 60/2^6 = 0.9375 always works
    const Dataset ds = grid_checkerboard(7);
    PdsParams params;
    params.target_count = 10;
    params.rejection_radius = 60.0;
    params.neighbor_count = 4;
    params.level_weights = std::vector<double>(5, 0.2);
    params.max_attempts = 2000;
    params.seed = 6;

    int calls = 0;
    const auto sample = sample_with_radius_backoff(
        [&](const PdsParams& p) {
            ++calls;
            return vanilla_pds(ds, p);
        },
        params);
    CHECK(sample.indices.size() == 10);
    CHECK(calls >= 2);
    CHECK(sample.params.rejection_radius <= 60.0 / 2.0);
    CHECK(min_pairwise(ds, sample.indices) > sample.params.rejection_radius);
}

TEST_CASE("active sample CSV rows carry dataset id, sample index, point id") {
    const Dataset ds = uniform_square(30, 12);
    PdsParams params;
    params.target_count = 3;
    params.rejection_radius = 0.0;
    params.seed = 5;
    const auto a = vanilla_pds(ds, params);
    params.seed = 6;
    const auto b = vanilla_pds(ds, params);

    std::ostringstream out;
    write_active_samples_csv(out, "unit", {a, b});
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "dataset_id, sample_index, point_id");
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        CHECK(line.rfind("unit, ", 0) == 0);
        ++rows;
    }
    CHECK(rows == 6);
}
