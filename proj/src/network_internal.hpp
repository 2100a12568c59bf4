#pragma once

#include <vector>

#include "asbci/network.hpp"
#include "asbci/rng.hpp"

namespace asbci::detail {

struct LayerCache {
    Shape3 in_shape, out_shape;
    std::vector<double> input;          // block input, batch-major flat
    std::vector<double> bn_xhat;        // normalized pre-activation
    std::vector<double> bn_mean, bn_var;  // statistics used this pass
    bool used_batch_stats = false;
    std::vector<double> preact;         // input of the activation
    std::vector<double> dropout_scale;  // per-element multiplier, empty if off
    std::vector<std::size_t> pool_argmax;
};

// Forward pass through all blocks; returns final logits (batch x classes).
// In train mode unfrozen batch-norm blocks use batch statistics (folded
// into the running buffers only when update_running_stats); frozen blocks
// always run in inference style. caches may be null for inference.
std::vector<double> run_forward(ModelState& state, const std::vector<const Epoch*>& batch,
                                bool train_mode, Rng* dropout_rng,
                                bool update_running_stats, std::vector<LayerCache>* caches);

struct StepResult {
    double loss = 0.0;
    std::vector<BlockGrads> grads;
};

// Train-mode forward plus analytic backward for mean cross-entropy.
StepResult forward_backward(ModelState& state, const std::vector<const Epoch*>& batch,
                            const std::vector<int>& labels, Rng* dropout_rng,
                            bool update_running_stats);

// Softmax over each row of logits.
std::vector<std::vector<double>> softmax_rows(const std::vector<double>& logits,
                                              std::size_t batch, std::size_t classes);

double mean_cross_entropy(const std::vector<double>& logits, const std::vector<int>& labels,
                          std::size_t classes);

std::vector<const Epoch*> epoch_pointers(const std::vector<Epoch>& epochs);

}  // namespace asbci::detail
