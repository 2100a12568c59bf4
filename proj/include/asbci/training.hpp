#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "asbci/network.hpp"
#include "asbci/sampling.hpp"
#include "asbci/signal.hpp"

namespace asbci {

struct OptimizerConfig {
    double learning_rate = 1e-3;
    double weight_decay = 1e-2;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::size_t batch_size = 16;
    std::size_t epochs = 200;
    std::optional<std::size_t> early_stop_patience;
    std::uint64_t seed = 0;  // batching and dropout stream
};

enum class BatchSourceKind { Uniform, DensePds, VanillaPds };

// Mini-batch provider. For the Poisson-disk kinds, batches are drawn from
// the z-scored flattened training epochs; target_count and seed of the
// params are overridden per step, and a non-positive rejection_radius is
// replaced by the nearest-neighbor quantile default.
struct BatchSourceConfig {
    BatchSourceKind kind = BatchSourceKind::Uniform;
    PdsParams pds;
};

struct TrainReport {
    std::vector<double> loss_curve;          // mean batch loss per epoch
    std::vector<double> val_accuracy_curve;  // one entry per epoch when val given
    double wall_clock_seconds = 0.0;
    std::optional<double> final_test_accuracy;
    std::size_t sample_count_used = 0;
};

// Mini-batch AdamW training with cross-entropy loss; only unfrozen blocks
// receive updates. When a validation set is given, the returned state is
// the checkpoint with the best validation accuracy (earliest epoch wins
// ties); otherwise the final state.
std::pair<ModelState, TrainReport> train(const ModelState& initial,
                                         const std::vector<Epoch>& train_set,
                                         const std::vector<Epoch>& val_set,
                                         const OptimizerConfig& opt,
                                         const BatchSourceConfig& source = {});

// Freezes the first block, unfreezes the rest, shuffles the target
// training epochs once with shuffle_seed (fixed per subject so rate
// subsets nest), keeps the first ceil(adapt_rate_percent% of n), and
// trains.
std::pair<ModelState, TrainReport> fine_tune(const ModelState& base,
                                             const std::vector<Epoch>& target_train,
                                             const std::vector<Epoch>& target_val,
                                             int adapt_rate_percent,
                                             const OptimizerConfig& opt,
                                             std::uint64_t shuffle_seed,
                                             const BatchSourceConfig& source = {});

struct Evaluation {
    double accuracy = 0.0;
    // confusion[true_label][predicted_label]; prediction is the first
    // index attaining the row maximum
    std::vector<std::vector<std::size_t>> confusion;
};

Evaluation evaluate(const ModelState& state, const std::vector<Epoch>& test_set);

// Flattens epochs into z-scored labeled points for the samplers.
Dataset epochs_to_points(const std::vector<Epoch>& epochs);

}  // namespace asbci
