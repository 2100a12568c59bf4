#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "asbci/experiment.hpp"
#include "asbci/model_io.hpp"
#include "asbci/sampling.hpp"
#include "asbci/signal.hpp"
#include "asbci/stats.hpp"
#include "asbci/synthetic.hpp"
#include "asbci/training.hpp"

namespace fs = std::filesystem;
using namespace asbci;

namespace {

std::ofstream open_output(const std::string& path) {
    const fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    return out;
}

void emit_manifest(const std::string& path, const ParsedConfig& config,
                   const std::string& command) {
    auto out = open_output(path);
    write_manifest(out, config, command);
}

std::vector<Epoch> load_epoch_files(const std::vector<std::string>& files,
                                    std::size_t channels, double rate_hz) {
    std::vector<Epoch> epochs;
    for (const auto& file : files) {
        std::ifstream in(file);
        if (!in) throw std::runtime_error("cannot open epoch file: " + file);
        auto part = read_epochs_csv(in, channels, rate_hz);
        epochs.insert(epochs.end(), part.begin(), part.end());
    }
    return epochs;
}

std::vector<SubjectDataset> resolve_datasets(const ParsedConfig& config, std::size_t channels,
                                             double rate_hz) {
    std::vector<SubjectDataset> datasets;
    if (config.has_synth) datasets = generate_synthetic(config.synth);
    if (!config.dataset_files.empty()) {
        auto epochs = load_epoch_files(config.dataset_files, channels, rate_hz);
        auto grouped = group_epochs(epochs);
        datasets.insert(datasets.end(), grouped.begin(), grouped.end());
    }
    if (datasets.empty()) {
        throw std::runtime_error("config provides no datasets: add a synth block or files");
    }
    return datasets;
}

void write_tables(const std::string& dir, const std::vector<NamedSummary>& tables) {
    for (const auto& named : tables) {
        auto out = open_output((fs::path(dir) / named.file_name).string());
        write_summary_csv(out, named.table);
        std::cout << "wrote " << (fs::path(dir) / named.file_name).string() << '\n';
    }
}

int run_synth(const std::string& config_path, const std::string& out_dir) {
    ParsedConfig config = load_config_file(config_path);
    if (!config.has_synth) throw std::runtime_error("synth: config has no synth block");
    const auto datasets = generate_synthetic(config.synth);
    fs::create_directories(out_dir);
    for (const auto& sd : datasets) {
        std::vector<Epoch> all;
        for (const auto& [session, epochs] : sd.sessions)
            all.insert(all.end(), epochs.begin(), epochs.end());
        auto out = open_output((fs::path(out_dir) / (sd.subject + "_epochs.csv")).string());
        write_epochs_csv(out, all);
        std::cout << "wrote " << sd.subject << ": " << all.size() << " epochs\n";
    }
    emit_manifest((fs::path(out_dir) / "manifest.txt").string(), config, "synth");
    return 0;
}

int run_preprocess(const std::string& rec_path, const std::string& events_path,
                   const std::string& out_path, double notch_hz, double target_rate,
                   double window_ms, double overlap_ms) {
    std::ifstream rec_in(rec_path);
    if (!rec_in) throw std::runtime_error("cannot open recording: " + rec_path);
    RawRecording rec = read_recording_csv(rec_in);
    const double source_rate = rec.rate_hz;
    std::cout << "loaded " << rec.data.size() << " channels at " << rec.rate_hz << " Hz\n";

    rec = bandpass(rec);
    std::cout << "bandpass 1-15 Hz order 6 applied\n";
    if (notch_hz > 0) {
        rec = notch(rec, notch_hz);
        std::cout << "notch at " << notch_hz << " Hz applied\n";
    }
    rec = decimate(rec, target_rate);
    std::cout << "decimated to " << rec.rate_hz << " Hz\n";
    rec = winsorize(rec);
    std::cout << "winsorized at the 5th/95th percentiles\n";

    std::ifstream events_in(events_path);
    if (!events_in) throw std::runtime_error("cannot open events: " + events_path);
    const auto events = read_events_csv(events_in);
    const auto epochs = epoch_windows(rec, events, window_ms, overlap_ms, source_rate);
    std::cout << "cut " << epochs.size() << " epochs of " << window_ms << " ms\n";

    auto out = open_output(out_path);
    write_epochs_csv(out, epochs);
    std::cout << "wrote " << out_path << '\n';
    return 0;
}

int run_sample(const std::vector<std::string>& epoch_files, std::size_t channels,
               double rate_hz, std::size_t factor, const std::string& sampler,
               std::size_t neighbors, double radius, std::uint64_t seed,
               const std::string& out_path) {
    const auto epochs = load_epoch_files(epoch_files, channels, rate_hz);
    if (factor > epochs.size()) {
        throw std::runtime_error("sample factor exceeds pool size " +
                                 std::to_string(epochs.size()));
    }
    ActiveSamplingOptions opts;
    opts.enabled = true;
    opts.kind = sampler == "vanilla" ? SamplerKind::Vanilla : SamplerKind::Dense;
    opts.sample_factor = factor;
    opts.pds.neighbor_count = neighbors;
    opts.pds.rejection_radius = radius;

    const Dataset points = epochs_to_points(epochs);
    PdsParams params = opts.pds;
    params.target_count = factor;
    params.seed = seed;
    if (params.rejection_radius <= 0) params.rejection_radius = default_rejection_radius(points);
    params.max_attempts = std::max(params.max_attempts, 200 * factor + 1000);
    if (opts.kind == SamplerKind::Dense && params.level_weights.empty()) {
        params.level_weights.assign(neighbors + 1, 1.0 / static_cast<double>(neighbors + 1));
    }
    const ActiveSample sample = sample_with_radius_backoff(
        [&](const PdsParams& p) {
            return opts.kind == SamplerKind::Dense ? dense_pds(points, p)
                                                   : vanilla_pds(points, p);
        },
        params);

    auto out = open_output(out_path);
    write_active_samples_csv(out, fs::path(epoch_files.front()).stem().string(), {sample});
    std::cout << "accepted " << sample.indices.size() << " of " << epochs.size()
              << " epochs (radius " << sample.params.rejection_radius << ", "
              << sample.attempts_used << " attempts)\n";
    std::cout << "wrote " << out_path << '\n';
    return 0;
}

int run_train(const std::string& config_path, const std::string& out_dir,
              std::size_t channels, double rate_hz) {
    ParsedConfig config = load_config_file(config_path);
    if (!out_dir.empty()) config.experiment.output_dir = out_dir;
    const auto datasets = resolve_datasets(config, channels, rate_hz);
    const ExperimentReport report = run_experiment(config.experiment, datasets);

    const std::string dir =
        config.experiment.output_dir.empty() ? "." : config.experiment.output_dir;
    emit_manifest((fs::path(dir) / "manifest.txt").string(), config, "train");
    write_tables(dir, aggregate_reports({report}));

    double mean = 0.0;
    for (const auto& row : report.rows) mean += row.test_accuracy;
    if (!report.rows.empty()) mean /= static_cast<double>(report.rows.size());
    std::cout << "scheme " << scheme_name(report.scheme) << ", "
              << (report.active_sampling ? "with" : "without") << " active sampling: mean "
              << "test accuracy " << 100.0 * mean << "% over " << report.rows.size()
              << " rows\n";
    std::cout << "training wall clock " << report.total_training_seconds
              << " s, sampling wall clock " << report.total_sampling_seconds << " s\n";
    return 0;
}

int run_sweep(const std::string& config_path, const std::string& out_dir,
              std::size_t channels, double rate_hz, std::vector<std::size_t> factors) {
    ParsedConfig config = load_config_file(config_path);
    const auto datasets = resolve_datasets(config, channels, rate_hz);
    SweepResult sweep;
    if (factors.empty()) {
        sweep = sampling_factor_sweep(config.experiment, datasets);
    } else {
        sweep = sampling_factor_sweep(config.experiment, datasets, factors);
    }
    fs::create_directories(out_dir);
    auto out = open_output((fs::path(out_dir) / "sweep.csv").string());
    write_sweep_csv(out, sweep);
    emit_manifest((fs::path(out_dir) / "manifest.txt").string(), config, "sweep");
    std::cout << "modal best factor " << sweep.modal_best_factor << '\n';
    std::cout << "wrote " << (fs::path(out_dir) / "sweep.csv").string() << '\n';
    return 0;
}

int run_report(const std::vector<std::string>& report_files, const std::string& out_dir,
               const std::string& std_convention) {
    std::vector<ExperimentReport> reports;
    for (const auto& file : report_files) {
        std::ifstream in(file);
        if (!in) throw std::runtime_error("cannot open report: " + file);
        reports.push_back(read_report_csv(in));
    }
    const StdConvention convention =
        std_convention == "sample" ? StdConvention::Sample : StdConvention::Population;
    write_tables(out_dir, aggregate_reports(reports, convention));
    return 0;
}

int run_embed(const std::vector<std::string>& epoch_files, std::size_t channels,
              double rate_hz, const std::string& out_path) {
    const auto epochs = load_epoch_files(epoch_files, channels, rate_hz);
    const Dataset points = epochs_to_points(epochs);
    std::vector<std::vector<double>> rows;
    rows.reserve(points.size());
    for (const auto& p : points) rows.push_back(p.features);
    const auto plane = principal_plane(rows);

    auto out = open_output(out_path);
    out << "uid,subject,session,label,x,y\n";
    out.precision(10);
    for (std::size_t i = 0; i < epochs.size(); ++i) {
        out << epochs[i].uid << ',' << epochs[i].subject << ',' << epochs[i].session << ','
            << epochs[i].label << ',' << plane[i].first << ',' << plane[i].second << '\n';
    }
    std::cout << "wrote " << out_path << " (" << epochs.size() << " rows)\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Active-sampling oddball BCI toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_path, rec_path, events_path, sampler = "dense";
    std::string std_convention = "population";
    std::vector<std::string> epoch_files, report_files;
    std::size_t channels = 4, factor = 1200, neighbors = 5;
    double rate_hz = 32.0, notch_hz = 50.0, target_rate = 32.0;
    double window_ms = 1000.0, overlap_ms = 600.0, radius = 0.0;
    std::uint64_t seed = 0;
    std::vector<std::size_t> factors;

    auto* synth = app.add_subcommand("synth", "generate synthetic oddball datasets");
    synth->add_option("--config", config_path, "JSON config with a synth block")->required();
    synth->add_option("--out", out_path, "output directory")->required();

    auto* preprocess =
        app.add_subcommand("preprocess", "filter, decimate, winsorize, and cut epochs");
    preprocess->add_option("--recording", rec_path, "recording CSV")->required();
    preprocess->add_option("--events", events_path, "events CSV")->required();
    preprocess->add_option("--out", out_path, "epochs CSV to write")->required();
    preprocess->add_option("--notch-hz", notch_hz, "mains frequency, 0 disables");
    preprocess->add_option("--target-rate", target_rate, "post-decimation rate in Hz");
    preprocess->add_option("--window-ms", window_ms, "epoch window length");
    preprocess->add_option("--overlap-ms", overlap_ms, "documented epoch overlap");

    auto* sample = app.add_subcommand("sample", "reduce an epoch pool by dart throwing");
    sample->add_option("--epochs", epoch_files, "epoch CSV files")->required();
    sample->add_option("--channels", channels, "channel count of the epoch files");
    sample->add_option("--rate", rate_hz, "sampling rate of the epoch files");
    sample->add_option("--factor", factor, "epochs to keep");
    sample->add_option("--sampler", sampler, "dense or vanilla");
    sample->add_option("--neighbors", neighbors, "neighborhood size for mingling");
    sample->add_option("--radius", radius, "rejection radius, 0 for the quantile default");
    sample->add_option("--seed", seed, "draw seed");
    sample->add_option("--out", out_path, "sample CSV to write")->required();

    auto* train = app.add_subcommand("train", "run the configured experiment scheme");
    train->add_option("--config", config_path, "JSON experiment config")->required();
    train->add_option("--out", out_path, "output directory (overrides config)");
    train->add_option("--channels", channels, "channel count of file datasets");
    train->add_option("--rate", rate_hz, "sampling rate of file datasets");

    auto* sweep = app.add_subcommand("sweep", "sampling-factor sweep over the pool");
    sweep->add_option("--config", config_path, "JSON experiment config")->required();
    sweep->add_option("--out", out_path, "output directory")->required();
    sweep->add_option("--channels", channels, "channel count of file datasets");
    sweep->add_option("--rate", rate_hz, "sampling rate of file datasets");
    sweep->add_option("--factors", factors, "factors to try (default 500..1200 step 100)");

    auto* report = app.add_subcommand("report", "aggregate report CSVs into summary tables");
    report->add_option("--in", report_files, "report CSV files")->required();
    report->add_option("--out", out_path, "output directory")->required();
    report->add_option("--std", std_convention, "population or sample std");

    auto* embed = app.add_subcommand("embed", "export a 2-D principal-component embedding");
    embed->add_option("--epochs", epoch_files, "epoch CSV files")->required();
    embed->add_option("--channels", channels, "channel count of the epoch files");
    embed->add_option("--rate", rate_hz, "sampling rate of the epoch files");
    embed->add_option("--out", out_path, "embedding CSV to write")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) return run_synth(config_path, out_path);
        if (preprocess->parsed())
            return run_preprocess(rec_path, events_path, out_path, notch_hz, target_rate,
                                  window_ms, overlap_ms);
        if (sample->parsed())
            return run_sample(epoch_files, channels, rate_hz, factor, sampler, neighbors,
                              radius, seed, out_path);
        if (train->parsed()) return run_train(config_path, out_path, channels, rate_hz);
        if (sweep->parsed()) return run_sweep(config_path, out_path, channels, rate_hz, factors);
        if (report->parsed()) return run_report(report_files, out_path, std_convention);
        if (embed->parsed()) return run_embed(epoch_files, channels, rate_hz, out_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
