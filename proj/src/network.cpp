#include "asbci/network.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "network_internal.hpp"

namespace asbci {

namespace {

constexpr double kBnEpsilon = 1e-5;
constexpr double kBnMomentum = 0.1;

bool has_parameters(BlockKind kind) { return kind != BlockKind::MaxPool; }

std::size_t fan_in(const BlockSpec& block, const Shape3& in) {
    switch (block.kind) {
        case BlockKind::TemporalConv: return in.maps * block.kernel_length;
        case BlockKind::SpatialConv: return in.maps * in.height;
        case BlockKind::Dense: return in.size();
        case BlockKind::MaxPool: return 0;
    }
    return 0;
}

}  // namespace

Tensor make_tensor(std::vector<std::size_t> dims, double fill) {
    Tensor t;
    t.dims = std::move(dims);
    std::size_t total = 1;
    for (const std::size_t d : t.dims) total *= d;
    t.values.assign(t.dims.empty() ? 0 : total, fill);
    return t;
}

std::vector<Shape3> chain_shapes(const NetworkSpec& spec) {
    if (spec.blocks.empty()) throw std::invalid_argument("network: no blocks");
    if (spec.channels < 1 || spec.time_samples < 1)
        throw std::invalid_argument("network: input shape must be positive");
    if (spec.class_count < 2) throw std::invalid_argument("network: class_count must be >= 2");

    std::vector<Shape3> shapes;
    Shape3 cur{1, spec.channels, spec.time_samples};
    for (std::size_t i = 0; i < spec.blocks.size(); ++i) {
        const auto& block = spec.blocks[i];
        const bool final_block = i + 1 == spec.blocks.size();
        if (block.dropout_rate < 0.0 || block.dropout_rate >= 1.0)
            throw std::invalid_argument("network: dropout_rate must be in [0,1)");
        if (block.activation == Activation::Softmax && !final_block)
            throw std::invalid_argument("network: softmax is only allowed on the final block");

        switch (block.kind) {
            case BlockKind::TemporalConv:
                if (block.units < 1)
                    throw std::invalid_argument("network: temporal-conv needs filters");
                if (block.kernel_length < 1 || block.kernel_length > cur.width)
                    throw std::invalid_argument("network: temporal kernel exceeds width");
                cur = {block.units, cur.height, cur.width - block.kernel_length + 1};
                break;
            case BlockKind::SpatialConv:
                if (block.units < 1)
                    throw std::invalid_argument("network: spatial-conv needs filters");
                cur = {block.units, 1, cur.width};
                break;
            case BlockKind::MaxPool:
                if (block.kernel_length < 1 || block.kernel_length > cur.width)
                    throw std::invalid_argument("network: pool window exceeds width");
                if (block.batch_norm)
                    throw std::invalid_argument("network: max-pool blocks cannot batch-norm");
                if (block.activation != Activation::Linear)
                    throw std::invalid_argument("network: max-pool blocks take no activation");
                cur = {cur.maps, cur.height, cur.width / block.kernel_length};
                if (cur.width < 1)
                    throw std::invalid_argument("network: pool output width is zero");
                break;
            case BlockKind::Dense:
                if (block.units < 1) throw std::invalid_argument("network: dense needs units");
                cur = {block.units, 1, 1};
                break;
        }
        shapes.push_back(cur);
    }

    const auto& last = spec.blocks.back();
    if (last.kind != BlockKind::Dense || last.activation != Activation::Softmax ||
        last.units != spec.class_count)
        throw std::invalid_argument(
            "network: final block must be dense softmax with class_count units");
    return shapes;
}

ModelState init_model(const NetworkSpec& spec, std::uint64_t seed) {
    const auto shapes = chain_shapes(spec);
    ModelState state;
    state.spec = spec;
    state.seed = seed;
    state.frozen.assign(spec.blocks.size(), false);
    state.blocks.resize(spec.blocks.size());

    Shape3 in{1, spec.channels, spec.time_samples};
    for (std::size_t i = 0; i < spec.blocks.size(); ++i) {
        const auto& block = spec.blocks[i];
        auto& params = state.blocks[i];
        if (has_parameters(block.kind)) {
            std::vector<std::size_t> wdims;
            switch (block.kind) {
                case BlockKind::TemporalConv:
                    wdims = {block.units, in.maps, block.kernel_length};
                    break;
                case BlockKind::SpatialConv:
                    wdims = {block.units, in.maps, in.height};
                    break;
                case BlockKind::Dense:
                    wdims = {block.units, in.size()};
                    break;
                case BlockKind::MaxPool: break;
            }
            params.weights = make_tensor(wdims);
            params.bias = make_tensor({block.units});
            Rng rng(mix_seed(seed, i));
            const double bound = std::sqrt(1.0 / static_cast<double>(fan_in(block, in)));
            for (double& w : params.weights.values) w = rng.next_uniform(-bound, bound);
        }
        if (block.batch_norm) {
            const std::size_t maps = shapes[i].maps;
            params.bn_gamma = make_tensor({maps}, 1.0);
            params.bn_beta = make_tensor({maps}, 0.0);
            params.bn_mean = make_tensor({maps}, 0.0);
            params.bn_var = make_tensor({maps}, 1.0);
        }
        in = shapes[i];
    }
    return state;
}

std::size_t parameter_count(const ModelState& state) {
    std::size_t total = 0;
    for (const auto& b : state.blocks)
        total += b.weights.size() + b.bias.size() + b.bn_gamma.size() + b.bn_beta.size();
    return total;
}

namespace detail {

std::vector<const Epoch*> epoch_pointers(const std::vector<Epoch>& epochs) {
    std::vector<const Epoch*> out;
    out.reserve(epochs.size());
    for (const auto& e : epochs) out.push_back(&e);
    return out;
}

std::vector<std::vector<double>> softmax_rows(const std::vector<double>& logits,
                                              std::size_t batch, std::size_t classes) {
    std::vector<std::vector<double>> rows(batch, std::vector<double>(classes));
    for (std::size_t b = 0; b < batch; ++b) {
        double mx = logits[b * classes];
        for (std::size_t c = 1; c < classes; ++c) mx = std::max(mx, logits[b * classes + c]);
        double sum = 0.0;
        for (std::size_t c = 0; c < classes; ++c) {
            rows[b][c] = std::exp(logits[b * classes + c] - mx);
            sum += rows[b][c];
        }
        for (double& v : rows[b]) v /= sum;
    }
    return rows;
}

double mean_cross_entropy(const std::vector<double>& logits, const std::vector<int>& labels,
                          std::size_t classes) {
    const std::size_t batch = labels.size();
    const auto probs = softmax_rows(logits, batch, classes);
    double loss = 0.0;
    for (std::size_t b = 0; b < batch; ++b)
        loss -= std::log(std::max(probs[b][static_cast<std::size_t>(labels[b])], 1e-300));
    return loss / static_cast<double>(batch);
}

namespace {

// flat index helpers over batch-major activation buffers
inline std::size_t at(const Shape3& s, std::size_t b, std::size_t m, std::size_t h,
                      std::size_t w) {
    return ((b * s.maps + m) * s.height + h) * s.width + w;
}

void linear_forward(const BlockSpec& block, const BlockParams& params, const Shape3& in,
                    const Shape3& out, std::size_t batch, const std::vector<double>& x,
                    std::vector<double>& y, std::vector<std::size_t>* pool_argmax) {
    switch (block.kind) {
        case BlockKind::TemporalConv: {
            const std::size_t kt = block.kernel_length;
            for (std::size_t b = 0; b < batch; ++b)
                for (std::size_t f = 0; f < out.maps; ++f)
                    for (std::size_t h = 0; h < out.height; ++h)
                        for (std::size_t w = 0; w < out.width; ++w) {
                            double acc = params.bias.values[f];
                            for (std::size_t m = 0; m < in.maps; ++m)
                                for (std::size_t t = 0; t < kt; ++t)
                                    acc += params.weights.values[(f * in.maps + m) * kt + t] *
                                           x[at(in, b, m, h, w + t)];
                            y[at(out, b, f, h, w)] = acc;
                        }
            break;
        }
        case BlockKind::SpatialConv: {
            for (std::size_t b = 0; b < batch; ++b)
                for (std::size_t f = 0; f < out.maps; ++f)
                    for (std::size_t w = 0; w < out.width; ++w) {
                        double acc = params.bias.values[f];
                        for (std::size_t m = 0; m < in.maps; ++m)
                            for (std::size_t h = 0; h < in.height; ++h)
                                acc += params.weights.values[(f * in.maps + m) * in.height + h] *
                                       x[at(in, b, m, h, w)];
                        y[at(out, b, f, 0, w)] = acc;
                    }
            break;
        }
        case BlockKind::MaxPool: {
            const std::size_t pw = block.kernel_length;
            for (std::size_t b = 0; b < batch; ++b)
                for (std::size_t m = 0; m < out.maps; ++m)
                    for (std::size_t h = 0; h < out.height; ++h)
                        for (std::size_t w = 0; w < out.width; ++w) {
                            std::size_t best = at(in, b, m, h, w * pw);
                            for (std::size_t t = 1; t < pw; ++t) {
                                const std::size_t idx = at(in, b, m, h, w * pw + t);
                                if (x[idx] > x[best]) best = idx;
                            }
                            y[at(out, b, m, h, w)] = x[best];
                            if (pool_argmax) (*pool_argmax)[at(out, b, m, h, w)] = best;
                        }
            break;
        }
        case BlockKind::Dense: {
            const std::size_t s_in = in.size();
            for (std::size_t b = 0; b < batch; ++b)
                for (std::size_t u = 0; u < out.maps; ++u) {
                    double acc = params.bias.values[u];
                    const double* w_row = params.weights.values.data() + u * s_in;
                    const double* x_row = x.data() + b * s_in;
                    for (std::size_t s = 0; s < s_in; ++s) acc += w_row[s] * x_row[s];
                    y[b * out.maps + u] = acc;
                }
            break;
        }
    }
}

void linear_backward(const BlockSpec& block, const BlockParams& params, const Shape3& in,
                     const Shape3& out, std::size_t batch, const std::vector<double>& x,
                     const std::vector<double>& dy, std::vector<double>& dx,
                     BlockGrads* grads, const std::vector<std::size_t>& pool_argmax) {
    dx.assign(x.size(), 0.0);
    switch (block.kind) {
        case BlockKind::TemporalConv: {
            const std::size_t kt = block.kernel_length;
            for (std::size_t b = 0; b < batch; ++b)
                for (std::size_t f = 0; f < out.maps; ++f)
                    for (std::size_t h = 0; h < out.height; ++h)
                        for (std::size_t w = 0; w < out.width; ++w) {
                            const double g = dy[at(out, b, f, h, w)];
                            if (grads) grads->bias.values[f] += g;
                            for (std::size_t m = 0; m < in.maps; ++m)
                                for (std::size_t t = 0; t < kt; ++t) {
                                    const std::size_t wi = (f * in.maps + m) * kt + t;
                                    const std::size_t xi = at(in, b, m, h, w + t);
                                    if (grads) grads->weights.values[wi] += g * x[xi];
                                    dx[xi] += g * params.weights.values[wi];
                                }
                        }
            break;
        }
        case BlockKind::SpatialConv: {
            for (std::size_t b = 0; b < batch; ++b)
                for (std::size_t f = 0; f < out.maps; ++f)
                    for (std::size_t w = 0; w < out.width; ++w) {
                        const double g = dy[at(out, b, f, 0, w)];
                        if (grads) grads->bias.values[f] += g;
                        for (std::size_t m = 0; m < in.maps; ++m)
                            for (std::size_t h = 0; h < in.height; ++h) {
                                const std::size_t wi = (f * in.maps + m) * in.height + h;
                                const std::size_t xi = at(in, b, m, h, w);
                                if (grads) grads->weights.values[wi] += g * x[xi];
                                dx[xi] += g * params.weights.values[wi];
                            }
                    }
            break;
        }
        case BlockKind::MaxPool: {
            for (std::size_t i = 0; i < dy.size(); ++i) dx[pool_argmax[i]] += dy[i];
            break;
        }
        case BlockKind::Dense: {
            const std::size_t s_in = in.size();
            for (std::size_t b = 0; b < batch; ++b)
                for (std::size_t u = 0; u < out.maps; ++u) {
                    const double g = dy[b * out.maps + u];
                    if (grads) grads->bias.values[u] += g;
                    const double* x_row = x.data() + b * s_in;
                    double* dx_row = dx.data() + b * s_in;
                    const double* w_row = params.weights.values.data() + u * s_in;
                    for (std::size_t s = 0; s < s_in; ++s) {
                        if (grads) grads->weights.values[u * s_in + s] += g * x_row[s];
                        dx_row[s] += g * w_row[s];
                    }
                }
            break;
        }
    }
}

}  // namespace

std::vector<double> run_forward(ModelState& state, const std::vector<const Epoch*>& batch,
                                bool train_mode, Rng* dropout_rng,
                                bool update_running_stats, std::vector<LayerCache>* caches) {
    if (batch.empty()) throw std::invalid_argument("forward: empty batch");
    const auto shapes = chain_shapes(state.spec);
    const std::size_t n = batch.size();

    Shape3 in_shape{1, state.spec.channels, state.spec.time_samples};
    std::vector<double> x(n * in_shape.size());
    for (std::size_t b = 0; b < n; ++b) {
        const Epoch& e = *batch[b];
        if (e.channels() != state.spec.channels || e.samples() != state.spec.time_samples)
            throw std::invalid_argument("forward: epoch shape does not match the network input");
        for (std::size_t c = 0; c < e.channels(); ++c)
            for (std::size_t t = 0; t < e.samples(); ++t)
                x[at(in_shape, b, 0, c, t)] = e.data[c][t];
    }

    if (caches) caches->assign(state.spec.blocks.size(), {});

    for (std::size_t i = 0; i < state.spec.blocks.size(); ++i) {
        const auto& block = state.spec.blocks[i];
        auto& params = state.blocks[i];
        const Shape3 out_shape = shapes[i];
        LayerCache* cache = caches ? &(*caches)[i] : nullptr;
        if (cache) {
            cache->in_shape = in_shape;
            cache->out_shape = out_shape;
            cache->input = x;
        }

        std::vector<double> y(n * out_shape.size());
        std::vector<std::size_t> argmax;
        if (block.kind == BlockKind::MaxPool) argmax.resize(n * out_shape.size());
        linear_forward(block, params, in_shape, out_shape, n, x, y,
                       argmax.empty() ? nullptr : &argmax);
        if (cache) cache->pool_argmax = std::move(argmax);

        if (block.batch_norm) {
            const std::size_t maps = out_shape.maps;
            const std::size_t span = out_shape.height * out_shape.width;
            const std::size_t count = n * span;
            const bool batch_stats = train_mode && !state.frozen[i];
            std::vector<double> mean(maps, 0.0), var(maps, 0.0);
            if (batch_stats) {
                for (std::size_t b = 0; b < n; ++b)
                    for (std::size_t m = 0; m < maps; ++m)
                        for (std::size_t s = 0; s < span; ++s)
                            mean[m] += y[(b * maps + m) * span + s];
                for (double& v : mean) v /= static_cast<double>(count);
                for (std::size_t b = 0; b < n; ++b)
                    for (std::size_t m = 0; m < maps; ++m)
                        for (std::size_t s = 0; s < span; ++s) {
                            const double c = y[(b * maps + m) * span + s] - mean[m];
                            var[m] += c * c;
                        }
                for (double& v : var) v /= static_cast<double>(count);
                if (update_running_stats)
                    for (std::size_t m = 0; m < maps; ++m) {
                        params.bn_mean.values[m] =
                            (1.0 - kBnMomentum) * params.bn_mean.values[m] + kBnMomentum * mean[m];
                        params.bn_var.values[m] =
                            (1.0 - kBnMomentum) * params.bn_var.values[m] + kBnMomentum * var[m];
                    }
            } else {
                mean = params.bn_mean.values;
                var = params.bn_var.values;
            }
            if (cache) {
                cache->used_batch_stats = batch_stats;
                cache->bn_mean = mean;
                cache->bn_var = var;
                cache->bn_xhat.resize(y.size());
            }
            for (std::size_t b = 0; b < n; ++b)
                for (std::size_t m = 0; m < maps; ++m) {
                    const double inv = 1.0 / std::sqrt(var[m] + kBnEpsilon);
                    for (std::size_t s = 0; s < span; ++s) {
                        const std::size_t idx = (b * maps + m) * span + s;
                        const double xh = (y[idx] - mean[m]) * inv;
                        if (cache) cache->bn_xhat[idx] = xh;
                        y[idx] = params.bn_gamma.values[m] * xh + params.bn_beta.values[m];
                    }
                }
        }

        if (cache) cache->preact = y;
        if (block.activation == Activation::Elu)
            for (double& v : y) v = v > 0.0 ? v : std::expm1(v);

        if (train_mode && dropout_rng && block.dropout_rate > 0.0) {
            const double keep = 1.0 - block.dropout_rate;
            std::vector<double> scale(y.size());
            for (std::size_t idx = 0; idx < y.size(); ++idx) {
                scale[idx] = dropout_rng->next_unit() < block.dropout_rate ? 0.0 : 1.0 / keep;
                y[idx] *= scale[idx];
            }
            if (cache) cache->dropout_scale = std::move(scale);
        }

        x = std::move(y);
        in_shape = out_shape;
    }
    return x;  // logits, batch x class_count
}

StepResult forward_backward(ModelState& state, const std::vector<const Epoch*>& batch,
                            const std::vector<int>& labels, Rng* dropout_rng,
                            bool update_running_stats) {
    if (batch.size() != labels.size())
        throw std::invalid_argument("forward_backward: batch and label sizes differ");
    const std::size_t classes = state.spec.class_count;
    for (const int label : labels)
        if (label < 0 || static_cast<std::size_t>(label) >= classes)
            throw std::invalid_argument("forward_backward: label out of range");

    std::vector<LayerCache> caches;
    const auto logits = run_forward(state, batch, true, dropout_rng, update_running_stats,
                                    &caches);
    const std::size_t n = batch.size();

    StepResult result;
    result.loss = mean_cross_entropy(logits, labels, classes);
    result.grads.resize(state.spec.blocks.size());
    for (std::size_t i = 0; i < state.spec.blocks.size(); ++i) {
        const auto& params = state.blocks[i];
        result.grads[i].weights = make_tensor(params.weights.dims);
        result.grads[i].bias = make_tensor(params.bias.dims);
        result.grads[i].bn_gamma = make_tensor(params.bn_gamma.dims);
        result.grads[i].bn_beta = make_tensor(params.bn_beta.dims);
    }

    // combined softmax and cross-entropy gradient
    const auto probs = softmax_rows(logits, n, classes);
    std::vector<double> d(n * classes);
    for (std::size_t b = 0; b < n; ++b)
        for (std::size_t c = 0; c < classes; ++c)
            d[b * classes + c] =
                (probs[b][c] - (static_cast<std::size_t>(labels[b]) == c ? 1.0 : 0.0)) /
                static_cast<double>(n);

    for (std::size_t ii = state.spec.blocks.size(); ii-- > 0;) {
        const auto& block = state.spec.blocks[ii];
        const auto& params = state.blocks[ii];
        auto& cache = caches[ii];
        auto& grads = result.grads[ii];

        if (!cache.dropout_scale.empty())
            for (std::size_t idx = 0; idx < d.size(); ++idx) d[idx] *= cache.dropout_scale[idx];

        if (block.activation == Activation::Elu)
            for (std::size_t idx = 0; idx < d.size(); ++idx) {
                const double p = cache.preact[idx];
                d[idx] *= p > 0.0 ? 1.0 : std::exp(p);
            }

        if (block.batch_norm) {
            const std::size_t maps = cache.out_shape.maps;
            const std::size_t span = cache.out_shape.height * cache.out_shape.width;
            const std::size_t count = n * span;
            std::vector<double> dxhat(d.size());
            for (std::size_t b = 0; b < n; ++b)
                for (std::size_t m = 0; m < maps; ++m)
                    for (std::size_t s = 0; s < span; ++s) {
                        const std::size_t idx = (b * maps + m) * span + s;
                        grads.bn_gamma.values[m] += d[idx] * cache.bn_xhat[idx];
                        grads.bn_beta.values[m] += d[idx];
                        dxhat[idx] = d[idx] * params.bn_gamma.values[m];
                    }
            if (cache.used_batch_stats) {
                // gradients flow through the batch statistics as well
                std::vector<double> sum_dxhat(maps, 0.0), sum_dxhat_xhat(maps, 0.0);
                for (std::size_t b = 0; b < n; ++b)
                    for (std::size_t m = 0; m < maps; ++m)
                        for (std::size_t s = 0; s < span; ++s) {
                            const std::size_t idx = (b * maps + m) * span + s;
                            sum_dxhat[m] += dxhat[idx];
                            sum_dxhat_xhat[m] += dxhat[idx] * cache.bn_xhat[idx];
                        }
                for (std::size_t b = 0; b < n; ++b)
                    for (std::size_t m = 0; m < maps; ++m) {
                        const double inv = 1.0 / std::sqrt(cache.bn_var[m] + kBnEpsilon);
                        for (std::size_t s = 0; s < span; ++s) {
                            const std::size_t idx = (b * maps + m) * span + s;
                            d[idx] = inv / static_cast<double>(count) *
                                     (static_cast<double>(count) * dxhat[idx] - sum_dxhat[m] -
                                      cache.bn_xhat[idx] * sum_dxhat_xhat[m]);
                        }
                    }
            } else {
                for (std::size_t b = 0; b < n; ++b)
                    for (std::size_t m = 0; m < maps; ++m) {
                        const double inv = 1.0 / std::sqrt(cache.bn_var[m] + kBnEpsilon);
                        for (std::size_t s = 0; s < span; ++s) {
                            const std::size_t idx = (b * maps + m) * span + s;
                            d[idx] = dxhat[idx] * inv;
                        }
                    }
            }
        }

        std::vector<double> dx;
        linear_backward(block, params, cache.in_shape, cache.out_shape, n, cache.input, d, dx,
                        &grads, cache.pool_argmax);
        d = std::move(dx);
    }
    return result;
}

}  // namespace detail

std::vector<std::vector<double>> forward(const ModelState& state,
                                         const std::vector<Epoch>& batch) {
    ModelState scratch = state;  // running stats untouched in eval mode
    const auto ptrs = detail::epoch_pointers(batch);
    const auto logits = detail::run_forward(scratch, ptrs, false, nullptr, false, nullptr);
    return detail::softmax_rows(logits, batch.size(), state.spec.class_count);
}

double training_loss(const ModelState& state, const std::vector<const Epoch*>& batch,
                     const std::vector<int>& labels) {
    ModelState scratch = state;
    const auto logits = detail::run_forward(scratch, batch, true, nullptr, false, nullptr);
    return detail::mean_cross_entropy(logits, labels, state.spec.class_count);
}

std::vector<BlockGrads> training_gradients(const ModelState& state,
                                           const std::vector<const Epoch*>& batch,
                                           const std::vector<int>& labels) {
    ModelState scratch = state;
    return detail::forward_backward(scratch, batch, labels, nullptr, false).grads;
}

}  // namespace asbci
