#pragma once

#include <cstdint>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "asbci/point_set.hpp"

namespace asbci {

// Parameters for the Poisson-disk samplers.
struct PdsParams {
    std::size_t target_count = 1;       // sample size to accept
    double rejection_radius = 0.0;      // minimum pairwise distance
    std::vector<double> level_weights;  // categorical weights over mingling levels
    std::size_t neighbor_count = 5;     // neighborhood size for the mingling index
    std::size_t max_attempts = 10000;   // dart-throw budget
    std::uint64_t seed = 0;
};

// An index subset of a dataset produced by a sampler, with the parameters
// that produced it.
struct ActiveSample {
    std::vector<std::size_t> indices;
    PdsParams params;
    std::size_t attempts_used = 0;
    double min_pair_distance = std::numeric_limits<double>::infinity();
};

// Raised when the dart-throw budget runs out before target_count points
// are accepted. Carries how far the draw got so callers can shrink the
// radius and retry.
class SampleInfeasibleError : public std::runtime_error {
  public:
    SampleInfeasibleError(const std::string& message, std::size_t attempts,
                          std::size_t partial)
        : std::runtime_error(message), attempts_used(attempts), partial_count(partial) {}
    std::size_t attempts_used;
    std::size_t partial_count;
};

// Optional instrumentation collected during a draw.
struct SampleTrace {
    std::size_t distance_evaluations = 0;
};

// Fraction of the neighbor_count nearest points (excluding p itself, ties
// broken by ascending id) whose label differs from p's.
double mingling_index(const LabeledPoint& p, const Dataset& dataset,
                      std::size_t neighbor_count);

// Partitions dataset ids into levels; level j holds exactly the points with
// mingling index j / neighbor_count. Requires levels == neighbor_count + 1.
std::vector<std::vector<std::size_t>> stratify_by_mingling(const Dataset& dataset,
                                                           std::size_t neighbor_count,
                                                           std::size_t levels);

// Dart throwing with candidates drawn from a categorical distribution over
// mingling levels; accepted points keep pairwise distance > rejection_radius.
ActiveSample dense_pds(const Dataset& dataset, const PdsParams& params,
                       SampleTrace* trace = nullptr);

// Dart throwing with candidates drawn uniformly from all not-yet-accepted
// points, ignoring mingling levels.
ActiveSample vanilla_pds(const Dataset& dataset, const PdsParams& params,
                         SampleTrace* trace = nullptr);

// Default radius rule: the q-th quantile of nearest-neighbor distances in
// the dataset.
double default_rejection_radius(const Dataset& dataset, double q = 0.10);

// Runs sampler(params) and, on infeasibility, halves the radius and retries
// up to max_halvings times before rethrowing.
template <class Sampler>
ActiveSample sample_with_radius_backoff(Sampler&& sampler, PdsParams params,
                                        int max_halvings = 6) {
    for (int attempt = 0;; ++attempt) {
        try {
            return sampler(params);
        } catch (const SampleInfeasibleError&) {
            if (attempt >= max_halvings) throw;
            params.rejection_radius *= 0.5;
        }
    }
}

// CSV rows: dataset_id, sample_index, point_id
void write_active_samples_csv(std::ostream& out, const std::string& dataset_id,
                              const std::vector<ActiveSample>& samples);

}  // namespace asbci
