#include "asbci/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "asbci/rng.hpp"

namespace asbci {

namespace {

void validate_common(const Dataset& dataset, const PdsParams& params) {
    if (dataset.empty()) throw std::invalid_argument("pds: dataset is empty");
    if (params.target_count < 1) throw std::invalid_argument("pds: target_count must be >= 1");
    if (params.neighbor_count < 1)
        throw std::invalid_argument("pds: neighbor_count must be >= 1");
    if (params.max_attempts < params.target_count)
        throw std::invalid_argument("pds: max_attempts must be >= target_count");
    if (params.rejection_radius < 0.0)
        throw std::invalid_argument("pds: rejection_radius must be >= 0");
    if (params.target_count > dataset.size())
        throw std::invalid_argument("pds: target_count exceeds dataset size");
}

void validate_weights(const std::vector<double>& weights, std::size_t levels) {
    if (weights.size() != levels)
        throw std::invalid_argument("pds: level_weights size must equal neighbor_count + 1");
    double sum = 0.0;
    for (const double w : weights) {
        if (w < 0.0) throw std::invalid_argument("pds: level_weights must be non-negative");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("pds: level_weights must sum to 1");
}

std::size_t draw_level(Rng& rng, const std::vector<double>& weights) {
    const double u = rng.next_unit();
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        if (u < acc) return i;
    }
    return weights.size() - 1;
}

// Count of the neighbor_count nearest points to p (ties by ascending id)
// carrying a different label.
std::size_t mingling_count(const LabeledPoint& p, const Dataset& dataset,
                           std::size_t neighbor_count) {
    if (dataset.size() < neighbor_count + 1)
        throw std::invalid_argument(
            "mingling_index: dataset must contain more than neighbor_count points");
    std::vector<std::pair<double, std::size_t>> order;
    order.reserve(dataset.size());
    for (const auto& q : dataset) {
        if (q.id == p.id) continue;
        order.emplace_back(distance(p, q), q.id);
    }
    if (order.size() < neighbor_count)
        throw std::invalid_argument(
            "mingling_index: dataset must contain at least neighbor_count other points");
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(neighbor_count),
                      order.end());
    std::size_t mixed = 0;
    for (std::size_t i = 0; i < neighbor_count; ++i) {
        const auto& q = dataset[order[i].second];
        if (q.label != p.label) ++mixed;
    }
    return mixed;
}

ActiveSample run_pds(const Dataset& dataset, const PdsParams& params, bool dense,
                     SampleTrace* trace) {
    validate_common(dataset, params);
    const std::size_t levels = params.neighbor_count + 1;

    for (std::size_t i = 0; i < dataset.size(); ++i)
        if (dataset[i].id != i)
            throw std::invalid_argument("pds: point ids must equal dataset positions");

    std::vector<std::vector<std::size_t>> pools;
    std::vector<double> weights;
    if (dense) {
        validate_weights(params.level_weights, levels);
        pools = stratify_by_mingling(dataset, params.neighbor_count, levels);
        weights = params.level_weights;
    } else {
        pools.resize(1);
        pools[0].resize(dataset.size());
        std::iota(pools[0].begin(), pools[0].end(), 0);
        weights = {1.0};
    }

    Rng rng(params.seed);
    ActiveSample sample;
    sample.params = params;

    std::size_t attempts = 0;
    int consecutive_empty = 0;
    while (sample.indices.size() < params.target_count) {
        if (attempts >= params.max_attempts)
            throw SampleInfeasibleError(
                "pds: attempt budget exhausted with " +
                    std::to_string(sample.indices.size()) + " of " +
                    std::to_string(params.target_count) + " points accepted",
                attempts, sample.indices.size());
        ++attempts;

        const std::size_t level = dense ? draw_level(rng, weights) : 0;
        auto& pool = pools[level];
        if (pool.empty()) {
            ++consecutive_empty;
            if (consecutive_empty >= 3) {
                // shift the weight of exhausted levels onto the rest
                double live = 0.0;
                for (std::size_t l = 0; l < pools.size(); ++l)
                    if (!pools[l].empty()) live += weights[l];
                if (live <= 0.0)
                    throw SampleInfeasibleError("pds: all candidate pools exhausted",
                                                attempts, sample.indices.size());
                for (std::size_t l = 0; l < pools.size(); ++l)
                    weights[l] = pools[l].empty() ? 0.0 : weights[l] / live;
                consecutive_empty = 0;
            }
            continue;
        }
        consecutive_empty = 0;

        const std::size_t slot = rng.next_index(pool.size());
        const std::size_t candidate = pool[slot];
        double nearest = std::numeric_limits<double>::infinity();
        for (const std::size_t idx : sample.indices) {
            nearest = std::min(nearest, distance(dataset[candidate], dataset[idx]));
            if (trace) ++trace->distance_evaluations;
        }
        if (nearest <= params.rejection_radius) continue;

        sample.indices.push_back(candidate);
        sample.min_pair_distance = std::min(sample.min_pair_distance, nearest);
        pool[slot] = pool.back();
        pool.pop_back();
    }
    sample.attempts_used = attempts;
    return sample;
}

}  // namespace

double mingling_index(const LabeledPoint& p, const Dataset& dataset,
                      std::size_t neighbor_count) {
    if (neighbor_count < 1)
        throw std::invalid_argument("mingling_index: neighbor_count must be >= 1");
    return static_cast<double>(mingling_count(p, dataset, neighbor_count)) /
           static_cast<double>(neighbor_count);
}

std::vector<std::vector<std::size_t>> stratify_by_mingling(const Dataset& dataset,
                                                           std::size_t neighbor_count,
                                                           std::size_t levels) {
    if (levels != neighbor_count + 1)
        throw std::invalid_argument("stratify_by_mingling: levels must equal neighbor_count + 1");
    std::vector<std::vector<std::size_t>> out(levels);
    for (const auto& p : dataset)
        out[mingling_count(p, dataset, neighbor_count)].push_back(p.id);
    return out;
}

ActiveSample dense_pds(const Dataset& dataset, const PdsParams& params, SampleTrace* trace) {
    return run_pds(dataset, params, true, trace);
}

ActiveSample vanilla_pds(const Dataset& dataset, const PdsParams& params, SampleTrace* trace) {
    return run_pds(dataset, params, false, trace);
}

double default_rejection_radius(const Dataset& dataset, double q) {
    return quantile(nearest_neighbor_distances(dataset), q);
}

void write_active_samples_csv(std::ostream& out, const std::string& dataset_id,
                              const std::vector<ActiveSample>& samples) {
    out << "dataset_id, sample_index, point_id\n";
    for (std::size_t s = 0; s < samples.size(); ++s)
        for (const std::size_t idx : samples[s].indices)
            out << dataset_id << ", " << s << ", " << idx << "\n";
}

}  // namespace asbci
