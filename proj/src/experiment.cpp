#include "asbci/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "asbci/rng.hpp"

namespace asbci {

namespace {

using json = nlohmann::json;

constexpr const char* kToolVersion = "asbci 1.0.0";

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void require_sessions(const SubjectDataset& sd, const char* op) {
    for (int s = 1; s <= 4; ++s) {
        if (!sd.sessions.count(s)) {
            throw std::invalid_argument(std::string(op) + ": subject " + sd.subject +
                                        " is missing session " + std::to_string(s));
        }
    }
}

std::vector<Epoch> concat_sessions(const SubjectDataset& sd, int first, int last) {
    std::vector<Epoch> out;
    for (int s = first; s <= last; ++s) {
        auto it = sd.sessions.find(s);
        if (it == sd.sessions.end()) continue;
        out.insert(out.end(), it->second.begin(), it->second.end());
    }
    return out;
}

// Shuffles the pool with a fixed sub-seed and splits off the validation
// tail; train size is round((1 - val_fraction) * n).
std::pair<std::vector<Epoch>, std::vector<Epoch>> shuffle_split(std::vector<Epoch> pool,
                                                                double val_fraction,
                                                                std::uint64_t seed) {
    if (!(val_fraction >= 0.0 && val_fraction < 1.0)) {
        throw std::invalid_argument("val_fraction must lie in [0, 1)");
    }
    Rng rng(mix_seed(seed, 0x85));
    rng.shuffle(pool);
    const auto n_train = static_cast<std::size_t>(
        std::llround((1.0 - val_fraction) * static_cast<double>(pool.size())));
    std::vector<Epoch> train(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::vector<Epoch> val(pool.begin() + static_cast<std::ptrdiff_t>(n_train), pool.end());
    return {std::move(train), std::move(val)};
}

void audit_no_leakage(const std::vector<Epoch>& test,
                      const std::vector<const std::vector<Epoch>*>& pools) {
    std::set<std::uint64_t> test_ids;
    for (const auto& e : test) test_ids.insert(e.uid);
    for (const auto* pool : pools) {
        for (const auto& e : *pool) {
            if (test_ids.count(e.uid)) {
                throw std::logic_error("leakage audit failed: test epoch uid " +
                                       std::to_string(e.uid) + " appears in a training pool");
            }
        }
    }
}

std::string format_fixed(double value, int digits) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(digits) << value;
    return out.str();
}

}  // namespace

std::string scheme_name(Scheme scheme) {
    switch (scheme) {
        case Scheme::Dependent: return "dependent";
        case Scheme::Independent: return "independent";
        case Scheme::Adaptive: return "adaptive";
    }
    return "unknown";
}

SplitDependent split_dependent(const SubjectDataset& sd) {
    require_sessions(sd, "split_dependent");
    SplitDependent out;
    out.train_val = concat_sessions(sd, 1, 3);
    out.test = sd.sessions.at(4);
    return out;
}

SplitAdaptive split_adaptive(const SubjectDataset& sd) {
    require_sessions(sd, "split_adaptive");
    SplitAdaptive out;
    out.target_train = concat_sessions(sd, 1, 2);
    out.target_val = sd.sessions.at(3);
    out.test = sd.sessions.at(4);
    return out;
}

std::vector<Epoch> active_sample_epochs(const std::vector<Epoch>& pool,
                                        const ActiveSamplingOptions& opts,
                                        std::uint64_t seed) {
    if (opts.sample_factor > pool.size()) {
        throw std::invalid_argument("active sampling factor " +
                                    std::to_string(opts.sample_factor) + " exceeds pool size " +
                                    std::to_string(pool.size()));
    }
    if (opts.sample_factor == pool.size()) return pool;

    const Dataset points = epochs_to_points(pool);
    PdsParams params = opts.pds;
    params.target_count = opts.sample_factor;
    params.seed = mix_seed(seed, 0xA5AA);
    if (params.rejection_radius <= 0.0) {
        params.rejection_radius = default_rejection_radius(points);
    }
    params.max_attempts =
        std::max(params.max_attempts, 200 * opts.sample_factor + 1000);
    if (opts.kind == SamplerKind::Dense && params.level_weights.empty()) {
        params.level_weights.assign(params.neighbor_count + 1,
                                    1.0 / static_cast<double>(params.neighbor_count + 1));
    }

    const ActiveSample sample = sample_with_radius_backoff(
        [&](const PdsParams& p) {
            return opts.kind == SamplerKind::Dense ? dense_pds(points, p)
                                                   : vanilla_pds(points, p);
        },
        params);

    std::vector<Epoch> reduced;
    reduced.reserve(sample.indices.size());
    for (std::size_t idx : sample.indices) reduced.push_back(pool[idx]);
    return reduced;
}

SplitIndependent split_independent(const std::vector<SubjectDataset>& all,
                                   const std::string& target, double val_fraction,
                                   const ActiveSamplingOptions& as, std::uint64_t seed) {
    if (all.size() < 2) {
        throw std::invalid_argument("split_independent: needs at least 2 subjects");
    }
    const SubjectDataset* target_sd = nullptr;
    for (const auto& sd : all) {
        if (sd.subject == target) target_sd = &sd;
    }
    if (!target_sd) {
        throw std::invalid_argument("split_independent: target subject " + target +
                                    " not present");
    }
    if (!target_sd->sessions.count(4)) {
        throw std::invalid_argument("split_independent: target subject " + target +
                                    " has no session 4");
    }

    std::vector<Epoch> pool;
    std::size_t source_index = 0;
    for (const auto& sd : all) {
        if (sd.subject == target) continue;
        std::vector<Epoch> subject_pool = concat_sessions(sd, 1, 4);
        if (as.enabled && !as.pooled) {
            subject_pool =
                active_sample_epochs(subject_pool, as, mix_seed(seed, 0x50 + source_index));
        }
        pool.insert(pool.end(), subject_pool.begin(), subject_pool.end());
        ++source_index;
    }
    if (as.enabled && as.pooled) {
        pool = active_sample_epochs(pool, as, mix_seed(seed, 0x50));
    }

    SplitIndependent out;
    auto [train, val] = shuffle_split(std::move(pool), val_fraction, seed);
    out.train = std::move(train);
    out.val = std::move(val);
    out.test = target_sd->sessions.at(4);
    return out;
}

NetworkSpec make_network_spec(const NetworkConfig& cfg, std::size_t channels,
                              std::size_t time_samples, std::size_t class_count) {
    NetworkSpec spec;
    spec.channels = channels;
    spec.time_samples = time_samples;
    spec.class_count = class_count;

    BlockSpec temporal;
    temporal.kind = BlockKind::TemporalConv;
    temporal.units = cfg.temporal_filters;
    temporal.kernel_length = cfg.kernel_length;
    temporal.activation = Activation::Linear;
    spec.blocks.push_back(temporal);

    BlockSpec spatial;
    spatial.kind = BlockKind::SpatialConv;
    spatial.units = cfg.temporal_filters;
    spatial.activation = Activation::Elu;
    spatial.batch_norm = true;
    spatial.dropout_rate = cfg.dropout_rate;
    spec.blocks.push_back(spatial);

    BlockSpec pool;
    pool.kind = BlockKind::MaxPool;
    pool.kernel_length = cfg.pool_width;
    spec.blocks.push_back(pool);

    if (cfg.hidden_units > 0) {
        BlockSpec hidden;
        hidden.kind = BlockKind::Dense;
        hidden.units = cfg.hidden_units;
        hidden.activation = Activation::Elu;
        hidden.dropout_rate = cfg.dropout_rate;
        spec.blocks.push_back(hidden);
    }

    BlockSpec output;
    output.kind = BlockKind::Dense;
    output.units = class_count;
    output.activation = Activation::Softmax;
    spec.blocks.push_back(output);
    return spec;
}

namespace {

struct TrainedModel {
    ModelState state;
    TrainReport report;
};

TrainedModel train_fresh(const ExperimentConfig& config, const std::vector<Epoch>& train_set,
                         const std::vector<Epoch>& val_set, std::uint64_t seed) {
    if (train_set.empty()) throw std::invalid_argument("empty training set");
    const NetworkSpec spec =
        make_network_spec(config.network, train_set.front().channels(),
                          train_set.front().samples(), 2);
    ModelState model = init_model(spec, mix_seed(seed, 0x111));
    OptimizerConfig opt = config.optimizer;
    opt.seed = mix_seed(seed, 0x222);
    auto [state, report] = train(model, train_set, val_set, opt, config.minibatch);
    return {std::move(state), std::move(report)};
}

void run_dependent_subject(const ExperimentConfig& config, const SubjectDataset& sd,
                           std::uint64_t subj_seed, ExperimentReport& out) {
    SplitDependent split = split_dependent(sd);
    double sampling_seconds = 0.0;
    std::vector<Epoch> pool = std::move(split.train_val);
    if (config.active_sampling.enabled) {
        const auto start = std::chrono::steady_clock::now();
        pool = active_sample_epochs(pool, config.active_sampling, subj_seed);
        sampling_seconds = seconds_since(start);
    }
    auto [train_set, val_set] = shuffle_split(std::move(pool), config.val_fraction, subj_seed);
    audit_no_leakage(split.test, {&train_set, &val_set});

    TrainedModel tm = train_fresh(config, train_set, val_set, subj_seed);
    const Evaluation eval = evaluate(tm.state, split.test);

    ReportRow row;
    row.subject = sd.subject;
    row.scheme = Scheme::Dependent;
    row.active_sampling = config.active_sampling.enabled;
    row.test_accuracy = eval.accuracy;
    row.train_count = train_set.size();
    row.val_count = val_set.size();
    row.test_count = split.test.size();
    row.sampling_seconds = sampling_seconds;
    row.training_seconds = tm.report.wall_clock_seconds;
    out.rows.push_back(std::move(row));
    out.total_sampling_seconds += sampling_seconds;
    out.total_training_seconds += tm.report.wall_clock_seconds;
}

void run_independent_subject(const ExperimentConfig& config,
                             const std::vector<SubjectDataset>& datasets,
                             const SubjectDataset& sd, std::uint64_t subj_seed,
                             ExperimentReport& out) {
    const auto start = std::chrono::steady_clock::now();
    SplitIndependent split = split_independent(datasets, sd.subject, config.val_fraction,
                                               config.active_sampling, subj_seed);
    const double sampling_seconds =
        config.active_sampling.enabled ? seconds_since(start) : 0.0;
    audit_no_leakage(split.test, {&split.train, &split.val});

    TrainedModel tm = train_fresh(config, split.train, split.val, subj_seed);
    const Evaluation eval = evaluate(tm.state, split.test);

    ReportRow row;
    row.subject = sd.subject;
    row.scheme = Scheme::Independent;
    row.active_sampling = config.active_sampling.enabled;
    row.test_accuracy = eval.accuracy;
    row.train_count = split.train.size();
    row.val_count = split.val.size();
    row.test_count = split.test.size();
    row.sampling_seconds = sampling_seconds;
    row.training_seconds = tm.report.wall_clock_seconds;
    out.rows.push_back(std::move(row));
    out.total_sampling_seconds += row.sampling_seconds;
    out.total_training_seconds += row.training_seconds;
}

void run_adaptive_subject(const ExperimentConfig& config,
                          const std::vector<SubjectDataset>& datasets,
                          const SubjectDataset& sd, std::uint64_t subj_seed,
                          ExperimentReport& out) {
    const auto sample_start = std::chrono::steady_clock::now();
    SplitIndependent base_split = split_independent(
        datasets, sd.subject, config.val_fraction, config.active_sampling, subj_seed);
    const double sampling_seconds =
        config.active_sampling.enabled ? seconds_since(sample_start) : 0.0;
    SplitAdaptive target = split_adaptive(sd);
    audit_no_leakage(target.test, {&base_split.train, &base_split.val, &target.target_train,
                                   &target.target_val});

    TrainedModel base = train_fresh(config, base_split.train, base_split.val, subj_seed);
    out.total_sampling_seconds += sampling_seconds;
    out.total_training_seconds += base.report.wall_clock_seconds;

    const double base_share =
        base.report.wall_clock_seconds / static_cast<double>(config.adapt_rates.size());
    const std::uint64_t shuffle_seed = mix_seed(subj_seed, 0x77);
    for (std::size_t ri = 0; ri < config.adapt_rates.size(); ++ri) {
        const int rate = config.adapt_rates[ri];
        OptimizerConfig opt = config.optimizer;
        opt.seed = mix_seed(subj_seed, 0x333 + static_cast<std::uint64_t>(rate));
        auto [adapted, ft_report] = fine_tune(base.state, target.target_train,
                                              target.target_val, rate, opt, shuffle_seed,
                                              config.minibatch);
        const Evaluation eval = evaluate(adapted, target.test);

        ReportRow row;
        row.subject = sd.subject;
        row.scheme = Scheme::Adaptive;
        row.active_sampling = config.active_sampling.enabled;
        row.adapt_rate = rate;
        row.test_accuracy = eval.accuracy;
        row.train_count = ft_report.sample_count_used;
        row.val_count = target.target_val.size();
        row.test_count = target.test.size();
        row.sampling_seconds = ri == 0 ? sampling_seconds : 0.0;
        row.training_seconds = base_share + ft_report.wall_clock_seconds;
        out.rows.push_back(std::move(row));
        out.total_training_seconds += ft_report.wall_clock_seconds;
    }
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config,
                                const std::vector<SubjectDataset>& datasets) {
    if (datasets.empty()) throw std::invalid_argument("run_experiment: no datasets");
    if (config.scheme == Scheme::Adaptive && config.adapt_rates.empty()) {
        throw std::invalid_argument("run_experiment: adaptive scheme requires adapt rates");
    }
    if (config.active_sampling.enabled &&
        config.active_sampling.sample_factor < config.optimizer.batch_size) {
        throw std::invalid_argument(
            "run_experiment: sample factor must be at least the batch size");
    }
    if (config.scheme != Scheme::Dependent && datasets.size() < 2) {
        throw std::invalid_argument("run_experiment: scheme needs at least 2 subjects");
    }

    ExperimentReport report;
    report.scheme = config.scheme;
    report.active_sampling = config.active_sampling.enabled;

    for (std::size_t i = 0; i < datasets.size(); ++i) {
        const auto& sd = datasets[i];
        const std::uint64_t subj_seed = mix_seed(config.seed, 0xE0 + i);
        try {
            switch (config.scheme) {
                case Scheme::Dependent:
                    run_dependent_subject(config, sd, subj_seed, report);
                    break;
                case Scheme::Independent:
                    run_independent_subject(config, datasets, sd, subj_seed, report);
                    break;
                case Scheme::Adaptive:
                    run_adaptive_subject(config, datasets, sd, subj_seed, report);
                    break;
            }
        } catch (const std::logic_error&) {
            throw;
        } catch (const std::exception& e) {
            throw std::runtime_error("scheme=" + scheme_name(config.scheme) +
                                     " subject=" + sd.subject + ": " + e.what());
        }
    }

    if (!config.output_dir.empty()) {
        std::filesystem::create_directories(config.output_dir);
        const auto dir = std::filesystem::path(config.output_dir);
        std::ofstream report_out(dir / "report.csv");
        write_report_csv(report_out, report);
        std::ofstream timing_out(dir / "timings.csv");
        write_timings_csv(timing_out, report);
    }
    return report;
}

void write_report_csv(std::ostream& out, const ExperimentReport& report) {
    out << "scheme,active_sampling,subject,adapt_rate,test_accuracy,train_count,val_count,"
           "test_count\n";
    for (const auto& row : report.rows) {
        out << scheme_name(row.scheme) << ',' << (row.active_sampling ? 1 : 0) << ','
            << row.subject << ',' << row.adapt_rate << ','
            << format_fixed(row.test_accuracy, 6) << ',' << row.train_count << ','
            << row.val_count << ',' << row.test_count << '\n';
    }
}

void write_timings_csv(std::ostream& out, const ExperimentReport& report) {
    out << "subject,adapt_rate,sampling_seconds,training_seconds\n";
    for (const auto& row : report.rows) {
        out << row.subject << ',' << row.adapt_rate << ','
            << format_fixed(row.sampling_seconds, 6) << ','
            << format_fixed(row.training_seconds, 6) << '\n';
    }
    out << "TOTAL,," << format_fixed(report.total_sampling_seconds, 6) << ','
        << format_fixed(report.total_training_seconds, 6) << '\n';
}

ExperimentReport read_report_csv(std::istream& in) {
    ExperimentReport report;
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("read_report_csv: empty input");
    const std::string expected =
        "scheme,active_sampling,subject,adapt_rate,test_accuracy,train_count,val_count,"
        "test_count";
    if (line != expected) throw std::invalid_argument("read_report_csv: unexpected header");

    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string field;
        ReportRow r;
        std::getline(row, field, ',');
        if (field == "dependent") r.scheme = Scheme::Dependent;
        else if (field == "independent") r.scheme = Scheme::Independent;
        else if (field == "adaptive") r.scheme = Scheme::Adaptive;
        else throw std::invalid_argument("read_report_csv: unknown scheme " + field);
        std::getline(row, field, ',');
        r.active_sampling = field == "1";
        std::getline(row, r.subject, ',');
        std::getline(row, field, ',');
        r.adapt_rate = std::stoi(field);
        std::getline(row, field, ',');
        r.test_accuracy = std::stod(field);
        std::getline(row, field, ',');
        r.train_count = std::stoull(field);
        std::getline(row, field, ',');
        r.val_count = std::stoull(field);
        std::getline(row, field, ',');
        r.test_count = std::stoull(field);
        if (first) {
            report.scheme = r.scheme;
            report.active_sampling = r.active_sampling;
            first = false;
        }
        report.rows.push_back(std::move(r));
    }
    return report;
}

std::vector<SubjectDataset> group_epochs(const std::vector<Epoch>& epochs,
                                         Provenance provenance) {
    std::map<std::string, SubjectDataset> by_subject;
    for (const auto& e : epochs) {
        auto& sd = by_subject[e.subject];
        sd.subject = e.subject;
        sd.provenance = provenance;
        sd.sessions[e.session].push_back(e);
    }
    std::vector<SubjectDataset> out;
    out.reserve(by_subject.size());
    for (auto& entry : by_subject) out.push_back(std::move(entry.second));
    return out;
}

SweepResult sampling_factor_sweep(const ExperimentConfig& config,
                                  const std::vector<SubjectDataset>& datasets,
                                  const std::vector<std::size_t>& factors) {
    if (config.scheme != Scheme::Independent) {
        throw std::invalid_argument("sampling_factor_sweep: requires the independent scheme");
    }
    if (datasets.size() < 2) {
        throw std::invalid_argument("sampling_factor_sweep: needs at least 2 subjects");
    }
    if (factors.empty()) throw std::invalid_argument("sampling_factor_sweep: no factors");

    SweepResult sweep;
    sweep.factors = factors;
    const double nan = std::numeric_limits<double>::quiet_NaN();

    for (std::size_t i = 0; i < datasets.size(); ++i) {
        const auto& sd = datasets[i];
        sweep.subjects.push_back(sd.subject);
        std::vector<double> accuracy_row(factors.size(), nan);
        const std::uint64_t subj_seed = mix_seed(config.seed, 0xE0 + i);

        for (std::size_t fi = 0; fi < factors.size(); ++fi) {
            ExperimentConfig cell = config;
            cell.active_sampling.enabled = true;
            cell.active_sampling.sample_factor = factors[fi];
            try {
                SplitIndependent split = split_independent(
                    datasets, sd.subject, cell.val_fraction, cell.active_sampling, subj_seed);
                TrainedModel tm = train_fresh(cell, split.train, split.val, subj_seed);
                accuracy_row[fi] = evaluate(tm.state, split.test).accuracy;
            } catch (const SampleInfeasibleError&) {
                // skipped cell
            } catch (const std::invalid_argument&) {
                // factor exceeds the pool; skipped cell
            }
        }

        std::size_t best = 0;
        double best_acc = -1.0;
        for (std::size_t fi = 0; fi < factors.size(); ++fi) {
            if (!std::isnan(accuracy_row[fi]) && accuracy_row[fi] > best_acc) {
                best_acc = accuracy_row[fi];
                best = factors[fi];
            }
        }
        sweep.best_factor_per_subject.push_back(best);
        sweep.accuracy.push_back(std::move(accuracy_row));
    }

    std::map<std::size_t, std::size_t> votes;
    for (std::size_t best : sweep.best_factor_per_subject) {
        if (best != 0) ++votes[best];
    }
    std::size_t modal = 0, modal_count = 0;
    for (const auto& [factor, count] : votes) {
        if (count > modal_count) {
            modal = factor;
            modal_count = count;
        }
    }
    sweep.modal_best_factor = modal;
    return sweep;
}

void write_sweep_csv(std::ostream& out, const SweepResult& sweep) {
    out << "# modal_best_factor=" << sweep.modal_best_factor << '\n';
    out << "subject";
    for (std::size_t f : sweep.factors) out << ",sf_" << f;
    out << ",best_factor\n";
    for (std::size_t i = 0; i < sweep.subjects.size(); ++i) {
        out << sweep.subjects[i];
        for (double acc : sweep.accuracy[i]) {
            out << ',';
            if (!std::isnan(acc)) out << format_fixed(acc, 6);
        }
        out << ',' << sweep.best_factor_per_subject[i] << '\n';
    }
}

std::vector<NamedSummary> aggregate_reports(const std::vector<ExperimentReport>& reports,
                                            StdConvention convention) {
    std::vector<std::string> columns = {"dependent", "independent"};
    for (int r = 10; r <= 100; r += 10) columns.push_back("adaptive_" + std::to_string(r));

    auto column_of = [&](const ReportRow& row) -> std::size_t {
        switch (row.scheme) {
            case Scheme::Dependent: return 0;
            case Scheme::Independent: return 1;
            case Scheme::Adaptive: {
                if (row.adapt_rate % 10 != 0 || row.adapt_rate < 10 || row.adapt_rate > 100) {
                    throw std::invalid_argument("aggregate_reports: adapt rate " +
                                                std::to_string(row.adapt_rate) +
                                                " has no table column");
                }
                return 1 + static_cast<std::size_t>(row.adapt_rate / 10);
            }
        }
        throw std::invalid_argument("aggregate_reports: unknown scheme");
    };

    // group key: (scheme, sampling flag)
    std::map<std::pair<int, bool>, std::map<std::string, std::vector<double>>> groups;
    for (const auto& report : reports) {
        for (const auto& row : report.rows) {
            auto& cells = groups[{static_cast<int>(row.scheme), row.active_sampling}];
            auto it = cells.try_emplace(row.subject,
                                        std::vector<double>(columns.size(),
                                                            std::numeric_limits<double>::quiet_NaN()))
                          .first;
            it->second[column_of(row)] = 100.0 * row.test_accuracy;
        }
    }

    std::vector<NamedSummary> tables;
    for (const auto& [key, cells] : groups) {
        std::vector<std::string> labels;
        std::vector<std::vector<double>> rows;
        for (const auto& [subject, values] : cells) {
            labels.push_back(subject);
            rows.push_back(values);
        }
        NamedSummary named;
        named.file_name = "table_" + scheme_name(static_cast<Scheme>(key.first)) + '_' +
                          (key.second ? "as" : "noas") + ".csv";
        named.table = aggregate(columns, labels, rows, convention);
        tables.push_back(std::move(named));
    }
    return tables;
}

namespace {

void require_keys(const json& object, const std::string& path,
                  const std::set<std::string>& allowed) {
    for (auto it = object.begin(); it != object.end(); ++it) {
        if (!allowed.count(it.key())) {
            throw std::invalid_argument("unknown config key: " +
                                        (path.empty() ? it.key() : path + "." + it.key()));
        }
    }
}

PdsParams parse_pds(const json& object, const std::string& path) {
    require_keys(object, path,
                 {"rejectionRadius", "neighborCount", "levelWeights", "maxAttempts"});
    PdsParams pds;
    pds.rejection_radius = object.value("rejectionRadius", 0.0);
    pds.neighbor_count = object.value("neighborCount", std::size_t{5});
    pds.max_attempts = object.value("maxAttempts", std::size_t{10000});
    if (object.contains("levelWeights")) {
        pds.level_weights = object.at("levelWeights").get<std::vector<double>>();
    }
    return pds;
}

Scheme parse_scheme(const std::string& name) {
    if (name == "dependent") return Scheme::Dependent;
    if (name == "independent") return Scheme::Independent;
    if (name == "adaptive") return Scheme::Adaptive;
    throw std::invalid_argument("unknown scheme: " + name);
}

SamplerKind parse_sampler_kind(const std::string& name) {
    if (name == "dense") return SamplerKind::Dense;
    if (name == "vanilla") return SamplerKind::Vanilla;
    throw std::invalid_argument("unknown samplerKind: " + name);
}

BatchSourceKind parse_batch_kind(const std::string& name) {
    if (name == "uniform") return BatchSourceKind::Uniform;
    if (name == "dense") return BatchSourceKind::DensePds;
    if (name == "vanilla") return BatchSourceKind::VanillaPds;
    throw std::invalid_argument("unknown minibatch kind: " + name);
}

}  // namespace

ParsedConfig parse_config_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config parse error: ") + e.what());
    }
    if (!doc.is_object()) throw std::invalid_argument("config root must be an object");
    require_keys(doc, "",
                 {"scheme", "useActiveSampling", "samplerKind", "sampleFactor",
                  "pooledSampling", "adaptRates", "valFraction", "seed", "pds", "minibatch",
                  "optimizer", "network", "synth", "datasets", "outputDir"});

    ParsedConfig parsed;
    auto& exp = parsed.experiment;
    exp.scheme = parse_scheme(doc.value("scheme", std::string("dependent")));
    exp.active_sampling.enabled = doc.value("useActiveSampling", false);
    exp.active_sampling.kind =
        parse_sampler_kind(doc.value("samplerKind", std::string("dense")));
    exp.active_sampling.sample_factor = doc.value("sampleFactor", std::size_t{1200});
    exp.active_sampling.pooled = doc.value("pooledSampling", false);
    if (doc.contains("adaptRates")) {
        exp.adapt_rates = doc.at("adaptRates").get<std::vector<int>>();
    }
    exp.val_fraction = doc.value("valFraction", 0.15);
    exp.seed = doc.value("seed", std::uint64_t{0});
    exp.output_dir = doc.value("outputDir", std::string());

    if (doc.contains("pds")) {
        exp.active_sampling.pds = parse_pds(doc.at("pds"), "pds");
    }

    if (doc.contains("minibatch")) {
        const auto& mb = doc.at("minibatch");
        require_keys(mb, "minibatch", {"kind", "pds"});
        exp.minibatch.kind = parse_batch_kind(mb.value("kind", std::string("uniform")));
        if (mb.contains("pds")) exp.minibatch.pds = parse_pds(mb.at("pds"), "minibatch.pds");
    }

    if (doc.contains("optimizer")) {
        const auto& opt = doc.at("optimizer");
        require_keys(opt, "optimizer",
                     {"learningRate", "weightDecay", "beta1", "beta2", "epsilon", "batchSize",
                      "epochs", "patience"});
        exp.optimizer.learning_rate = opt.value("learningRate", exp.optimizer.learning_rate);
        exp.optimizer.weight_decay = opt.value("weightDecay", exp.optimizer.weight_decay);
        exp.optimizer.beta1 = opt.value("beta1", exp.optimizer.beta1);
        exp.optimizer.beta2 = opt.value("beta2", exp.optimizer.beta2);
        exp.optimizer.epsilon = opt.value("epsilon", exp.optimizer.epsilon);
        exp.optimizer.batch_size = opt.value("batchSize", exp.optimizer.batch_size);
        exp.optimizer.epochs = opt.value("epochs", exp.optimizer.epochs);
        if (opt.contains("patience")) {
            exp.optimizer.early_stop_patience = opt.at("patience").get<std::size_t>();
        }
    }

    if (doc.contains("network")) {
        const auto& net = doc.at("network");
        require_keys(net, "network",
                     {"temporalFilters", "kernelLength", "poolWidth", "hiddenUnits",
                      "dropoutRate"});
        exp.network.temporal_filters = net.value("temporalFilters", exp.network.temporal_filters);
        exp.network.kernel_length = net.value("kernelLength", exp.network.kernel_length);
        exp.network.pool_width = net.value("poolWidth", exp.network.pool_width);
        exp.network.hidden_units = net.value("hiddenUnits", exp.network.hidden_units);
        exp.network.dropout_rate = net.value("dropoutRate", exp.network.dropout_rate);
    }

    if (doc.contains("synth")) {
        const auto& synth = doc.at("synth");
        require_keys(synth, "synth",
                     {"subjects", "channels", "rateHz", "epochsPerSession", "targetRate",
                      "erpAmplitude", "erpLatencyMs", "erpWidthMs", "noiseStd",
                      "latencyJitterMs", "amplitudeJitter", "seed"});
        auto& sp = parsed.synth;
        sp.subjects = synth.value("subjects", sp.subjects);
        sp.channels = synth.value("channels", sp.channels);
        sp.rate_hz = synth.value("rateHz", sp.rate_hz);
        sp.epochs_per_session = synth.value("epochsPerSession", sp.epochs_per_session);
        sp.target_rate = synth.value("targetRate", sp.target_rate);
        sp.erp_amplitude = synth.value("erpAmplitude", sp.erp_amplitude);
        sp.erp_latency_ms = synth.value("erpLatencyMs", sp.erp_latency_ms);
        sp.erp_width_ms = synth.value("erpWidthMs", sp.erp_width_ms);
        sp.noise_std = synth.value("noiseStd", sp.noise_std);
        sp.latency_jitter_ms = synth.value("latencyJitterMs", sp.latency_jitter_ms);
        sp.amplitude_jitter = synth.value("amplitudeJitter", sp.amplitude_jitter);
        sp.seed = synth.value("seed", sp.seed);
        parsed.has_synth = true;
    }

    if (doc.contains("datasets")) {
        parsed.dataset_files = doc.at("datasets").get<std::vector<std::string>>();
    }
    return parsed;
}

ParsedConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    ParsedConfig parsed = parse_config_json(buffer.str());
    if (const char* env = std::getenv("AS_SEED")) {
        parsed.experiment.seed = std::stoull(env);
    }
    return parsed;
}

std::string canonical_config_text(const ParsedConfig& config) {
    const auto& exp = config.experiment;
    std::ostringstream out;
    out << "scheme=" << scheme_name(exp.scheme) << ';'
        << "as=" << exp.active_sampling.enabled << ';'
        << "sampler=" << (exp.active_sampling.kind == SamplerKind::Dense ? "dense" : "vanilla")
        << ';' << "factor=" << exp.active_sampling.sample_factor << ';'
        << "pooled=" << exp.active_sampling.pooled << ';' << "rates=";
    for (int r : exp.adapt_rates) out << r << ' ';
    out << ';' << "valFraction=" << exp.val_fraction << ';'
        << "pdsRadius=" << exp.active_sampling.pds.rejection_radius << ';'
        << "pdsNeighbors=" << exp.active_sampling.pds.neighbor_count << ';'
        << "minibatch=" << static_cast<int>(exp.minibatch.kind) << ';'
        << "lr=" << exp.optimizer.learning_rate << ';'
        << "wd=" << exp.optimizer.weight_decay << ';'
        << "batch=" << exp.optimizer.batch_size << ';'
        << "epochs=" << exp.optimizer.epochs << ';'
        << "patience=" << (exp.optimizer.early_stop_patience ? *exp.optimizer.early_stop_patience : 0)
        << ';' << "filters=" << exp.network.temporal_filters << ';'
        << "kernel=" << exp.network.kernel_length << ';'
        << "pool=" << exp.network.pool_width << ';'
        << "hidden=" << exp.network.hidden_units << ';'
        << "dropout=" << exp.network.dropout_rate << ';' << "seed=" << exp.seed << ';'
        << "outputDir=" << exp.output_dir << ';';
    if (config.has_synth) {
        const auto& sp = config.synth;
        out << "synth=" << sp.subjects << '/' << sp.channels << '/' << sp.rate_hz << '/'
            << sp.epochs_per_session << '/' << sp.target_rate << '/' << sp.erp_amplitude << '/'
            << sp.erp_latency_ms << '/' << sp.erp_width_ms << '/' << sp.noise_std << '/'
            << sp.latency_jitter_ms << '/' << sp.amplitude_jitter << '/' << sp.seed << ';';
    }
    for (const auto& file : config.dataset_files) out << "dataset=" << file << ';';
    return out.str();
}

std::uint64_t config_hash(const ParsedConfig& config) {
    const std::string text = canonical_config_text(config);
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char byte : text) {
        hash ^= byte;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

void write_manifest(std::ostream& out, const ParsedConfig& config,
                    const std::string& command) {
    out << "tool=" << kToolVersion << '\n';
    out << "command=" << command << '\n';
    std::ostringstream hash_hex;
    hash_hex << std::hex << std::setw(16) << std::setfill('0') << config_hash(config);
    out << "config_hash=" << hash_hex.str() << '\n';
    out << "seed=" << config.experiment.seed << '\n';
    const char* env = std::getenv("AS_SEED");
    out << "as_seed_override=" << (env ? env : "") << '\n';
    for (const auto& file : config.dataset_files) out << "dataset=" << file << '\n';
}

}  // namespace asbci
