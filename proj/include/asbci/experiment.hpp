#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "asbci/sampling.hpp"
#include "asbci/signal.hpp"
#include "asbci/stats.hpp"
#include "asbci/training.hpp"

namespace asbci {

enum class Provenance { OeStyle, MeStyle, Synthetic };

struct SubjectDataset {
    std::string subject;
    std::map<int, std::vector<Epoch>> sessions;  // session number -> epochs
    Provenance provenance = Provenance::Synthetic;
};

enum class Scheme { Dependent, Independent, Adaptive };

enum class SamplerKind { Dense, Vanilla };

// Dataset-reduction sampling applied to training pools before the
// train/validation split.
struct ActiveSamplingOptions {
    bool enabled = false;
    SamplerKind kind = SamplerKind::Dense;
    std::size_t sample_factor = 1200;  // epochs kept per sampled pool
    // When true, multi-subject source pools are sampled once as a whole;
    // otherwise each source subject is sampled to sample_factor separately.
    bool pooled = false;
    PdsParams pds;  // target_count and seed are overridden per draw
};

// Classifier family: temporal convolution, spatial convolution over all
// channels, max-pool, optional hidden dense layer, softmax output.
struct NetworkConfig {
    std::size_t temporal_filters = 8;
    std::size_t kernel_length = 9;
    std::size_t pool_width = 4;
    std::size_t hidden_units = 0;  // 0 skips the hidden dense block
    double dropout_rate = 0.25;
};

struct SynthP300Params {
    std::size_t subjects = 2;
    std::size_t channels = 4;
    double rate_hz = 32.0;
    std::size_t epochs_per_session = 120;
    double target_rate = 1.0 / 6.0;
    double erp_amplitude = 1.0;      // microvolts at the deflection peak
    double erp_latency_ms = 300.0;
    double erp_width_ms = 80.0;      // Gaussian bump standard deviation
    double noise_std = 1.0;
    double latency_jitter_ms = 0.0;    // per-subject latency shift scale
    double amplitude_jitter = 0.0;     // per-subject amplitude shift scale
    std::uint64_t seed = 0;
};

struct ExperimentConfig {
    Scheme scheme = Scheme::Dependent;
    ActiveSamplingOptions active_sampling;
    std::vector<int> adapt_rates;  // percents, adaptive scheme only
    double val_fraction = 0.15;
    // Mini-batch provider used inside training (Uniform keeps plain SGD
    // batching; the Poisson-disk kinds re-sample each step).
    BatchSourceConfig minibatch;
    OptimizerConfig optimizer;
    NetworkConfig network;
    std::uint64_t seed = 0;
    std::string output_dir;
};

struct SplitDependent {
    std::vector<Epoch> train_val;  // sessions 1..3
    std::vector<Epoch> test;       // session 4
};

struct SplitIndependent {
    std::vector<Epoch> train;
    std::vector<Epoch> val;
    std::vector<Epoch> test;  // target subject, session 4
};

struct SplitAdaptive {
    std::vector<Epoch> target_train;  // sessions 1..2
    std::vector<Epoch> target_val;    // session 3
    std::vector<Epoch> test;          // session 4
};

SplitDependent split_dependent(const SubjectDataset& sd);

// Sources are every subject except the target, all sessions, reduced by
// active sampling when enabled, then shuffled with a fixed seed and split
// 85/15 (val_fraction configurable).
SplitIndependent split_independent(const std::vector<SubjectDataset>& all,
                                   const std::string& target, double val_fraction = 0.15,
                                   const ActiveSamplingOptions& as = {},
                                   std::uint64_t seed = 0);

SplitAdaptive split_adaptive(const SubjectDataset& sd);

// Reduces a pool of epochs to opts.sample_factor via the configured
// sampler over z-scored flattened epochs, halving the radius on
// infeasibility. Throws std::invalid_argument when the factor exceeds the
// pool size.
std::vector<Epoch> active_sample_epochs(const std::vector<Epoch>& pool,
                                        const ActiveSamplingOptions& opts,
                                        std::uint64_t seed);

NetworkSpec make_network_spec(const NetworkConfig& cfg, std::size_t channels,
                              std::size_t time_samples, std::size_t class_count);

struct ReportRow {
    std::string subject;
    Scheme scheme = Scheme::Dependent;
    bool active_sampling = false;
    int adapt_rate = 0;  // 0 for non-adaptive rows
    double test_accuracy = 0.0;
    std::size_t train_count = 0;
    std::size_t val_count = 0;
    std::size_t test_count = 0;
    double sampling_seconds = 0.0;
    double training_seconds = 0.0;  // adaptive rows: base share + adaptation
};

struct ExperimentReport {
    Scheme scheme = Scheme::Dependent;
    bool active_sampling = false;
    std::vector<ReportRow> rows;
    double total_sampling_seconds = 0.0;
    double total_training_seconds = 0.0;
};

// Runs the configured scheme for every subject. Deterministic given the
// config seed (timings aside); asserts that no test epoch id appears in
// any train or val pool.
ExperimentReport run_experiment(const ExperimentConfig& config,
                                const std::vector<SubjectDataset>& datasets);

// Timings are kept out of this file so reruns are byte-identical.
void write_report_csv(std::ostream& out, const ExperimentReport& report);
void write_timings_csv(std::ostream& out, const ExperimentReport& report);
ExperimentReport read_report_csv(std::istream& in);

// Groups a flat epoch list into per-subject datasets keyed by the epochs'
// own subject and session fields.
std::vector<SubjectDataset> group_epochs(const std::vector<Epoch>& epochs,
                                         Provenance provenance = Provenance::Synthetic);

struct SweepResult {
    std::vector<std::size_t> factors;
    std::vector<std::string> subjects;
    // accuracy[subject][factor_index]; NaN marks a skipped (infeasible) cell
    std::vector<std::vector<double>> accuracy;
    std::vector<std::size_t> best_factor_per_subject;  // 0 when all cells skipped
    std::size_t modal_best_factor = 0;
};

// Leave-one-subject-out accuracy per (subject, factor); infeasible factors
// are recorded as skipped cells rather than aborting the sweep.
SweepResult sampling_factor_sweep(const ExperimentConfig& config,
                                  const std::vector<SubjectDataset>& datasets,
                                  const std::vector<std::size_t>& factors = {
                                      500, 600, 700, 800, 900, 1000, 1100, 1200});

void write_sweep_csv(std::ostream& out, const SweepResult& sweep);

// Builds one summary table per (scheme, sampling flag) pair present in the
// reports, with the fixed column order subject, dependent, independent,
// adaptive_10 .. adaptive_100.
struct NamedSummary {
    std::string file_name;  // table_<scheme>_<as|noas>.csv
    SummaryTable table;
};

std::vector<NamedSummary> aggregate_reports(const std::vector<ExperimentReport>& reports,
                                            StdConvention convention = StdConvention::Population);

std::string scheme_name(Scheme scheme);

// JSON configuration mirroring ExperimentConfig field for field; unknown
// keys anywhere in the document are errors. The AS_SEED environment
// variable, when set, overrides the seed.
struct ParsedConfig {
    ExperimentConfig experiment;
    SynthP300Params synth;
    bool has_synth = false;
    std::vector<std::string> dataset_files;  // epoch CSV paths
};

ParsedConfig parse_config_json(const std::string& text);
ParsedConfig load_config_file(const std::string& path);

// 64-bit FNV-1a over the canonical config serialization.
std::uint64_t config_hash(const ParsedConfig& config);
std::string canonical_config_text(const ParsedConfig& config);

void write_manifest(std::ostream& out, const ParsedConfig& config,
                    const std::string& command);

}  // namespace asbci
