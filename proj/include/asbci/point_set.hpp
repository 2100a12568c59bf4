#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace asbci {

// A flattened feature vector with a class label; the atom all samplers
// operate on. The id is the point's index into its parent dataset.
struct LabeledPoint {
    std::size_t id = 0;
    std::vector<double> features;
    int label = 0;
};

using Dataset = std::vector<LabeledPoint>;

// Euclidean norm of the feature difference. Throws std::invalid_argument
// on dimension mismatch.
double distance(const LabeledPoint& a, const LabeledPoint& b);

// Per-dimension z-scoring over the whole dataset. Dimensions with zero
// variance are centered only.
Dataset zscore(const Dataset& dataset);

// Distance from each point to its nearest neighbor (brute force).
std::vector<double> nearest_neighbor_distances(const Dataset& dataset);

// Linear-interpolation quantile, q in [0, 1]. Sorts a copy.
double quantile(std::vector<double> values, double q);

// Linear-interpolation percentile, pct in [0, 100].
double percentile(std::vector<double> values, double pct);

// All pairwise distances (upper triangle), for histogram normalizations.
std::vector<double> pairwise_distances(const Dataset& dataset);

// Scores of each row on the first two principal axes of the centered row
// matrix (power iteration with deflation). Single-column input gets a zero
// second coordinate.
std::vector<std::pair<double, double>> principal_plane(
    const std::vector<std::vector<double>>& rows);

}  // namespace asbci
