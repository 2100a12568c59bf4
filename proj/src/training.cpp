#include "asbci/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "network_internal.hpp"

namespace asbci {

namespace {

struct AdamSlots {
    Tensor m, v;
};

struct BlockSlots {
    AdamSlots weights, bias, bn_gamma, bn_beta;
};

void adamw_update(Tensor& param, const Tensor& grad, AdamSlots& slots,
                  const OptimizerConfig& opt, double bias1, double bias2) {
    for (std::size_t i = 0; i < param.values.size(); ++i) {
        double& m = slots.m.values[i];
        double& v = slots.v.values[i];
        m = opt.beta1 * m + (1.0 - opt.beta1) * grad.values[i];
        v = opt.beta2 * v + (1.0 - opt.beta2) * grad.values[i] * grad.values[i];
        const double mhat = m / bias1;
        const double vhat = v / bias2;
        param.values[i] -= opt.learning_rate *
                           (mhat / (std::sqrt(vhat) + opt.epsilon) +
                            opt.weight_decay * param.values[i]);
    }
}

std::vector<std::size_t> draw_batch(const BatchSourceConfig& source, const Dataset& points,
                                    std::size_t n, std::size_t k, std::uint64_t step_seed,
                                    std::size_t epoch, std::size_t step) {
    if (source.kind == BatchSourceKind::Uniform) {
        Rng rng(step_seed);
        return rng.sample_without_replacement(n, k);
    }
    PdsParams params = source.pds;
    params.target_count = k;
    params.seed = step_seed;
    if (params.rejection_radius <= 0.0)
        params.rejection_radius = default_rejection_radius(points);
    if (params.max_attempts < params.target_count) params.max_attempts = 200 * k + 1000;
    try {
        if (source.kind == BatchSourceKind::DensePds) {
            if (params.level_weights.empty())
                params.level_weights.assign(params.neighbor_count + 1,
                                            1.0 / static_cast<double>(params.neighbor_count + 1));
            return dense_pds(points, params).indices;
        }
        return vanilla_pds(points, params).indices;
    } catch (const SampleInfeasibleError& e) {
        throw SampleInfeasibleError("train: batch draw failed at epoch " +
                                        std::to_string(epoch) + " step " + std::to_string(step) +
                                        ": " + e.what(),
                                    e.attempts_used, e.partial_count);
    }
}

}  // namespace

Dataset epochs_to_points(const std::vector<Epoch>& epochs) {
    Dataset points;
    points.reserve(epochs.size());
    for (std::size_t i = 0; i < epochs.size(); ++i)
        points.push_back({i, epochs[i].flattened(), epochs[i].label});
    return zscore(points);
}

std::pair<ModelState, TrainReport> train(const ModelState& initial,
                                         const std::vector<Epoch>& train_set,
                                         const std::vector<Epoch>& val_set,
                                         const OptimizerConfig& opt,
                                         const BatchSourceConfig& source) {
    if (train_set.empty()) throw std::invalid_argument("train: empty training set");
    if (opt.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
    if (opt.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
    for (const auto& e : train_set)
        if (e.label < 0 || static_cast<std::size_t>(e.label) >= initial.spec.class_count)
            throw std::invalid_argument("train: label out of range");

    const auto start = std::chrono::steady_clock::now();
    const std::size_t n = train_set.size();
    const std::size_t k = std::min(opt.batch_size, n);
    const std::size_t steps = std::max<std::size_t>(1, n / k);

    Dataset points;
    if (source.kind != BatchSourceKind::Uniform) points = epochs_to_points(train_set);

    ModelState state = initial;
    std::vector<BlockSlots> slots(state.blocks.size());
    for (std::size_t i = 0; i < state.blocks.size(); ++i) {
        slots[i].weights = {make_tensor(state.blocks[i].weights.dims),
                            make_tensor(state.blocks[i].weights.dims)};
        slots[i].bias = {make_tensor(state.blocks[i].bias.dims),
                         make_tensor(state.blocks[i].bias.dims)};
        slots[i].bn_gamma = {make_tensor(state.blocks[i].bn_gamma.dims),
                             make_tensor(state.blocks[i].bn_gamma.dims)};
        slots[i].bn_beta = {make_tensor(state.blocks[i].bn_beta.dims),
                            make_tensor(state.blocks[i].bn_beta.dims)};
    }

    TrainReport report;
    report.sample_count_used = n;
    ModelState best_state = state;
    double best_val = -1.0;
    std::size_t since_best = 0;
    std::size_t adam_step = 0;

    for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
        double epoch_loss = 0.0;
        for (std::size_t step = 0; step < steps; ++step) {
            const std::uint64_t step_salt = epoch * 1000003ULL + step;
            const auto batch_ids = draw_batch(source, points, n, k,
                                              mix_seed(opt.seed, step_salt), epoch, step);
            std::vector<const Epoch*> batch;
            std::vector<int> labels;
            batch.reserve(k);
            labels.reserve(k);
            for (const std::size_t id : batch_ids) {
                batch.push_back(&train_set[id]);
                labels.push_back(train_set[id].label);
            }

            Rng dropout_rng(mix_seed(opt.seed ^ 0x5e11ed5eedULL, step_salt));
            const auto result =
                detail::forward_backward(state, batch, labels, &dropout_rng, true);
            epoch_loss += result.loss;

            ++adam_step;
            const double bias1 = 1.0 - std::pow(opt.beta1, static_cast<double>(adam_step));
            const double bias2 = 1.0 - std::pow(opt.beta2, static_cast<double>(adam_step));
            for (std::size_t i = 0; i < state.blocks.size(); ++i) {
                if (state.frozen[i]) continue;
                adamw_update(state.blocks[i].weights, result.grads[i].weights,
                             slots[i].weights, opt, bias1, bias2);
                adamw_update(state.blocks[i].bias, result.grads[i].bias, slots[i].bias, opt,
                             bias1, bias2);
                adamw_update(state.blocks[i].bn_gamma, result.grads[i].bn_gamma,
                             slots[i].bn_gamma, opt, bias1, bias2);
                adamw_update(state.blocks[i].bn_beta, result.grads[i].bn_beta,
                             slots[i].bn_beta, opt, bias1, bias2);
            }
        }
        report.loss_curve.push_back(epoch_loss / static_cast<double>(steps));

        if (!val_set.empty()) {
            const double acc = evaluate(state, val_set).accuracy;
            report.val_accuracy_curve.push_back(acc);
            if (acc > best_val) {
                best_val = acc;
                best_state = state;
                since_best = 0;
            } else if (opt.early_stop_patience && ++since_best >= *opt.early_stop_patience) {
                break;
            }
        }
    }

    report.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return {val_set.empty() ? std::move(state) : std::move(best_state), std::move(report)};
}

std::pair<ModelState, TrainReport> fine_tune(const ModelState& base,
                                             const std::vector<Epoch>& target_train,
                                             const std::vector<Epoch>& target_val,
                                             int adapt_rate_percent,
                                             const OptimizerConfig& opt,
                                             std::uint64_t shuffle_seed,
                                             const BatchSourceConfig& source) {
    if (adapt_rate_percent < 10 || adapt_rate_percent > 100 || adapt_rate_percent % 10 != 0)
        throw std::invalid_argument("fine_tune: adapt rate must be one of 10, 20, ..., 100");
    if (target_train.empty()) throw std::invalid_argument("fine_tune: empty target set");

    std::vector<std::size_t> order(target_train.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(shuffle_seed);
    rng.shuffle(order);
    const std::size_t keep =
        (static_cast<std::size_t>(adapt_rate_percent) * target_train.size() + 99) / 100;
    std::vector<Epoch> subset;
    subset.reserve(keep);
    for (std::size_t i = 0; i < keep; ++i) subset.push_back(target_train[order[i]]);

    ModelState adapted = base;
    adapted.frozen.assign(adapted.frozen.size(), false);
    adapted.frozen[0] = true;
    return train(adapted, subset, target_val, opt, source);
}

Evaluation evaluate(const ModelState& state, const std::vector<Epoch>& test_set) {
    if (test_set.empty()) throw std::invalid_argument("evaluate: empty test set");
    const auto probs = forward(state, test_set);
    Evaluation eval;
    const std::size_t classes = state.spec.class_count;
    eval.confusion.assign(classes, std::vector<std::size_t>(classes, 0));
    std::size_t correct = 0;
    for (std::size_t i = 0; i < test_set.size(); ++i) {
        std::size_t pred = 0;
        for (std::size_t c = 1; c < classes; ++c)
            if (probs[i][c] > probs[i][pred]) pred = c;
        const auto truth = static_cast<std::size_t>(test_set[i].label);
        if (truth >= classes) throw std::invalid_argument("evaluate: label out of range");
        ++eval.confusion[truth][pred];
        if (pred == truth) ++correct;
    }
    eval.accuracy = static_cast<double>(correct) / static_cast<double>(test_set.size());
    return eval;
}

}  // namespace asbci
