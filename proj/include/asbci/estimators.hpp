#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "asbci/point_set.hpp"
#include "asbci/sampling.hpp"

namespace asbci {

// Distance histogram of within-sample pairs, normalized so that uniform
// sampling without replacement gives density ~ 1 in every bin.
struct PairCorrelation {
    std::vector<double> radius_bins;  // bin edges, strictly increasing
    std::vector<double> density;      // one entry per bin (edges.size() - 1)
    std::size_t sample_count = 0;
};

PairCorrelation pair_correlation(const std::vector<ActiveSample>& samples,
                                 const Dataset& dataset,
                                 const std::vector<double>& bins);

// Empirical variance of the mini-batch mean gradient across repeated draws.
struct GradientStats {
    std::vector<double> mean_gradient;
    std::vector<double> per_coordinate_variance;  // over batch means, ddof = 1
    double trace_variance = 0.0;
    std::size_t batch_count = 0;
};

// loss_gradient maps a batch of point ids to the mean gradient vector;
// sampler maps a draw index to a batch of exactly k ids.
GradientStats gradient_variance(
    const std::function<std::vector<double>(const std::vector<std::size_t>&)>& loss_gradient,
    std::size_t dataset_size,
    const std::function<std::vector<std::size_t>(std::size_t)>& sampler,
    std::size_t k, std::size_t repeats);

}  // namespace asbci
