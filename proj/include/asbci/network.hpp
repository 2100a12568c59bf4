#pragma once

#include <cstdint>
#include <vector>

#include "asbci/signal.hpp"

namespace asbci {

enum class BlockKind { TemporalConv, SpatialConv, MaxPool, Dense };
enum class Activation { Linear, Elu, Softmax };

// One block of the classifier. units is the filter count for conv blocks
// and the output width for dense blocks; kernel_length is the temporal
// kernel width for temporal-conv and the window for max-pool (spatial-conv
// always spans the full height).
struct BlockSpec {
    BlockKind kind = BlockKind::Dense;
    std::size_t units = 0;
    std::size_t kernel_length = 0;
    Activation activation = Activation::Linear;
    double dropout_rate = 0.0;
    bool batch_norm = false;
};

struct NetworkSpec {
    std::vector<BlockSpec> blocks;
    std::size_t channels = 0;
    std::size_t time_samples = 0;
    std::size_t class_count = 2;
};

// maps x height x width of one activation tensor (excluding batch)
struct Shape3 {
    std::size_t maps = 1, height = 1, width = 1;
    std::size_t size() const { return maps * height * width; }
};

// Validates the spec and returns the output shape of every block; entry 0
// of the input chain is {1, channels, time_samples}. Throws
// std::invalid_argument when shapes do not chain.
std::vector<Shape3> chain_shapes(const NetworkSpec& spec);

struct Tensor {
    std::vector<std::size_t> dims;
    std::vector<double> values;
    std::size_t size() const { return values.size(); }
};

Tensor make_tensor(std::vector<std::size_t> dims, double fill = 0.0);

struct BlockParams {
    Tensor weights, bias;        // empty for max-pool blocks
    Tensor bn_gamma, bn_beta;    // learnable batch-norm parameters
    Tensor bn_mean, bn_var;      // running statistics (buffers)
};

// Layered parameters plus per-block freeze flags. A frozen block receives
// no parameter updates and keeps its running statistics fixed, so its
// bytes stay identical across training.
struct ModelState {
    NetworkSpec spec;
    std::vector<BlockParams> blocks;
    std::vector<bool> frozen;
    std::uint64_t seed = 0;
};

// Deterministic fan-in scaled uniform initialization; all freeze flags off.
ModelState init_model(const NetworkSpec& spec, std::uint64_t seed);

std::size_t parameter_count(const ModelState& state);

// Inference-mode forward: dropout off, batch-norm uses running statistics.
// Returns one probability row per epoch (rows sum to 1).
std::vector<std::vector<double>> forward(const ModelState& state,
                                         const std::vector<Epoch>& batch);

// Gradients mirroring the learnable tensors of each block.
struct BlockGrads {
    Tensor weights, bias, bn_gamma, bn_beta;
};

// Mean cross-entropy of the batch in training mode (batch statistics for
// batch-norm, dropout disabled), without touching running statistics.
// Probe entry point for finite-difference checks.
double training_loss(const ModelState& state, const std::vector<const Epoch*>& batch,
                     const std::vector<int>& labels);

// Analytic gradients of training_loss with respect to every learnable
// parameter, in the same configuration.
std::vector<BlockGrads> training_gradients(const ModelState& state,
                                           const std::vector<const Epoch*>& batch,
                                           const std::vector<int>& labels);

}  // namespace asbci
