#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "asbci/experiment.hpp"
#include "asbci/model_io.hpp"

using namespace asbci;

namespace {

const char* kFullConfig = R"({
  "scheme": "adaptive",
  "seed": 42,
  "valFraction": 0.2,
  "adaptRates": [10, 50, 100],
  "outputDir": "out",
  "useActiveSampling": true,
  "samplerKind": "vanilla",
  "sampleFactor": 700,
  "pooledSampling": true,
  "pds": {"rejectionRadius": 0.4, "neighborCount": 7, "maxAttempts": 5000,
          "levelWeights": [0.5, 0.25, 0.25]},
  "minibatch": {"kind": "dense", "pds": {"neighborCount": 3}},
  "optimizer": {"learningRate": 0.002, "weightDecay": 0.05, "batchSize": 32,
                "epochs": 75},
  "network": {"temporalFilters": 4, "kernelLength": 7, "poolWidth": 2,
              "hiddenUnits": 16, "dropoutRate": 0.1},
  "synth": {"subjects": 3, "channels": 2, "epochsPerSession": 90, "seed": 11},
  "datasets": ["a.csv", "b.csv"]
})";

struct TempFile {
    std::filesystem::path path;
    explicit TempFile(const std::string& text) {
        path = std::filesystem::temp_directory_path() /
               ("asbci_test_" + std::to_string(std::rand()) + ".json");
        std::ofstream out(path);
        out << text;
    }
    ~TempFile() { std::filesystem::remove(path); }
};

ModelState sample_model() {
    NetworkSpec spec;
    spec.channels = 2;
    spec.time_samples = 16;
    spec.class_count = 2;
    BlockSpec temporal;
    temporal.kind = BlockKind::TemporalConv;
    temporal.units = 3;
    temporal.kernel_length = 5;
    spec.blocks.push_back(temporal);
    BlockSpec spatial;
    spatial.kind = BlockKind::SpatialConv;
    spatial.units = 3;
    spatial.activation = Activation::Elu;
    spatial.batch_norm = true;
    spatial.dropout_rate = 0.25;
    spec.blocks.push_back(spatial);
    BlockSpec pool;
    pool.kind = BlockKind::MaxPool;
    pool.kernel_length = 4;
    spec.blocks.push_back(pool);
    BlockSpec dense;
    dense.kind = BlockKind::Dense;
    dense.units = 2;
    dense.activation = Activation::Softmax;
    spec.blocks.push_back(dense);

    ModelState state = init_model(spec, 77);
    state.frozen[1] = true;
    return state;
}

}  // namespace

TEST_CASE("an empty json object yields the documented defaults") {
    const ParsedConfig config = parse_config_json("{}");
    CHECK(config.experiment.scheme == Scheme::Dependent);
    CHECK(config.experiment.val_fraction == 0.15);
    CHECK_FALSE(config.experiment.active_sampling.enabled);
    CHECK(config.experiment.active_sampling.sample_factor == 1200);
    CHECK(config.experiment.optimizer.batch_size == 16);
    CHECK(config.experiment.optimizer.epochs == 200);
    CHECK(config.experiment.network.temporal_filters == 8);
    CHECK(config.experiment.network.kernel_length == 9);
    CHECK(config.experiment.minibatch.kind == BatchSourceKind::Uniform);
    CHECK_FALSE(config.has_synth);
    CHECK(config.dataset_files.empty());
}

TEST_CASE("a fully populated document lands field for field") {
    const ParsedConfig config = parse_config_json(kFullConfig);
    const ExperimentConfig& exp = config.experiment;
    CHECK(exp.scheme == Scheme::Adaptive);
    CHECK(exp.seed == 42);
    CHECK(exp.val_fraction == 0.2);
    CHECK(exp.adapt_rates == std::vector<int>{10, 50, 100});
    CHECK(exp.output_dir == "out");
    CHECK(exp.active_sampling.enabled);
    CHECK(exp.active_sampling.kind == SamplerKind::Vanilla);
    CHECK(exp.active_sampling.sample_factor == 700);
    CHECK(exp.active_sampling.pooled);
    CHECK(exp.active_sampling.pds.rejection_radius == 0.4);
    CHECK(exp.active_sampling.pds.neighbor_count == 7);
    CHECK(exp.active_sampling.pds.max_attempts == 5000);
    CHECK(exp.active_sampling.pds.level_weights == std::vector<double>{0.5, 0.25, 0.25});
    CHECK(exp.minibatch.kind == BatchSourceKind::DensePds);
    CHECK(exp.minibatch.pds.neighbor_count == 3);
    CHECK(exp.optimizer.learning_rate == 0.002);
    CHECK(exp.optimizer.weight_decay == 0.05);
    CHECK(exp.optimizer.batch_size == 32);
    CHECK(exp.optimizer.epochs == 75);
    CHECK(exp.network.temporal_filters == 4);
    CHECK(exp.network.kernel_length == 7);
    CHECK(exp.network.pool_width == 2);
    CHECK(exp.network.hidden_units == 16);
    CHECK(exp.network.dropout_rate == 0.1);
    CHECK(config.has_synth);
    CHECK(config.synth.subjects == 3);
    CHECK(config.synth.channels == 2);
    CHECK(config.synth.epochs_per_session == 90);
    CHECK(config.synth.seed == 11);
    CHECK(config.dataset_files == std::vector<std::string>{"a.csv", "b.csv"});
}

TEST_CASE("unknown keys are rejected at any nesting depth") {
    CHECK_THROWS_WITH_AS(parse_config_json(R"({"shceme": "dependent"})"),
                         doctest::Contains("shceme"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_config_json(R"({"optimizer": {"momentum": 0.9}})"),
                         doctest::Contains("optimizer.momentum"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_config_json(R"({"pds": {"radius": 1.0}})"),
                         doctest::Contains("pds.radius"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_config_json(R"({"minibatch": {"pds": {"radius": 1.0}}})"),
                         doctest::Contains("minibatch.pds.radius"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config_json(R"({"scheme": "oddball"})"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config_json(R"({"samplerKind": "grid"})"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config_json(R"({"minibatch": {"kind": "cluster"}})"),
                    std::invalid_argument);
    CHECK_THROWS_AS(parse_config_json("not json at all"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config_json("[1, 2, 3]"), std::invalid_argument);
}

TEST_CASE("the canonical serialization drives a stable hash") {
    const ParsedConfig a = parse_config_json(kFullConfig);
    const ParsedConfig b = parse_config_json(kFullConfig);
    CHECK(config_hash(a) == config_hash(b));
    CHECK(canonical_config_text(a) == canonical_config_text(b));

    ParsedConfig c = a;
    c.experiment.seed = 43;
    CHECK(config_hash(c) != config_hash(a));
    ParsedConfig d = a;
    d.experiment.active_sampling.sample_factor = 701;
    CHECK(config_hash(d) != config_hash(a));
    ParsedConfig e = a;
    e.dataset_files.push_back("c.csv");
    CHECK(config_hash(e) != config_hash(a));
}

TEST_CASE("config files load from disk and honour the seed override") {
    TempFile file(R"({"scheme": "dependent", "seed": 7})");

    unsetenv("AS_SEED");
    const ParsedConfig plain = load_config_file(file.path.string());
    CHECK(plain.experiment.seed == 7);

    setenv("AS_SEED", "99", 1);
    const ParsedConfig overridden = load_config_file(file.path.string());
    CHECK(overridden.experiment.seed == 99);

    setenv("AS_SEED", "not a number", 1);
    CHECK_THROWS_AS(load_config_file(file.path.string()), std::invalid_argument);
    unsetenv("AS_SEED");

    CHECK_THROWS_AS(load_config_file("/nonexistent/definitely_missing.json"),
                    std::runtime_error);
}

TEST_CASE("manifests record the tool, command, hash and seed") {
    const ParsedConfig config =
        parse_config_json(R"({"seed": 5, "datasets": ["run1.csv"]})");
    std::ostringstream out;
    unsetenv("AS_SEED");
    write_manifest(out, config, "train --config demo.json");
    const std::string text = out.str();
    CHECK(text.find("tool=asbci 1.0.0") != std::string::npos);
    CHECK(text.find("command=train --config demo.json") != std::string::npos);
    CHECK(text.find("seed=5") != std::string::npos);
    CHECK(text.find("as_seed_override=\n") != std::string::npos);
    CHECK(text.find("dataset=run1.csv") != std::string::npos);

    std::ostringstream expected_hash;
    expected_hash << std::hex << std::setw(16) << std::setfill('0') << config_hash(config);
    CHECK(text.find("config_hash=" + expected_hash.str()) != std::string::npos);
}

TEST_CASE("model files round trip bit for bit") {
    const ModelState original = sample_model();
    std::stringstream buffer;
    save_model(buffer, original);
    const ModelState loaded = load_model(buffer);

    CHECK(loaded.seed == original.seed);
    CHECK(loaded.spec.channels == original.spec.channels);
    CHECK(loaded.spec.time_samples == original.spec.time_samples);
    CHECK(loaded.spec.class_count == original.spec.class_count);
    REQUIRE(loaded.spec.blocks.size() == original.spec.blocks.size());
    REQUIRE(loaded.frozen == original.frozen);
    for (std::size_t i = 0; i < loaded.spec.blocks.size(); ++i) {
        CHECK(loaded.spec.blocks[i].kind == original.spec.blocks[i].kind);
        CHECK(loaded.spec.blocks[i].units == original.spec.blocks[i].units);
        CHECK(loaded.spec.blocks[i].kernel_length == original.spec.blocks[i].kernel_length);
        CHECK(loaded.spec.blocks[i].activation == original.spec.blocks[i].activation);
        CHECK(loaded.spec.blocks[i].dropout_rate == original.spec.blocks[i].dropout_rate);
        CHECK(loaded.spec.blocks[i].batch_norm == original.spec.blocks[i].batch_norm);
        CHECK(loaded.blocks[i].weights.dims == original.blocks[i].weights.dims);
        CHECK(loaded.blocks[i].weights.values == original.blocks[i].weights.values);
        CHECK(loaded.blocks[i].bias.values == original.blocks[i].bias.values);
        CHECK(loaded.blocks[i].bn_gamma.values == original.blocks[i].bn_gamma.values);
        CHECK(loaded.blocks[i].bn_beta.values == original.blocks[i].bn_beta.values);
        CHECK(loaded.blocks[i].bn_mean.values == original.blocks[i].bn_mean.values);
        CHECK(loaded.blocks[i].bn_var.values == original.blocks[i].bn_var.values);
    }

    // a loaded model behaves identically
    std::stringstream again;
    save_model(again, loaded);
    CHECK(again.str() == buffer.str());
}

TEST_CASE("model loading rejects corrupted headers") {
    const ModelState original = sample_model();
    std::stringstream buffer;
    save_model(buffer, original);
    std::string bytes = buffer.str();

    std::string wrong_magic = bytes;
    wrong_magic[0] = 'X';
    std::stringstream bad1(wrong_magic);
    CHECK_THROWS_AS(load_model(bad1), std::runtime_error);

    std::string wrong_version = bytes;
    wrong_version[4] = '\x7f';
    std::stringstream bad2(wrong_version);
    CHECK_THROWS_AS(load_model(bad2), std::runtime_error);

    std::stringstream truncated(bytes.substr(0, bytes.size() / 2));
    CHECK_THROWS_AS(load_model(truncated), std::runtime_error);
}

TEST_CASE("model files survive a disk round trip") {
    const ModelState original = sample_model();
    const auto path = std::filesystem::temp_directory_path() / "asbci_model_test.bin";
    save_model_file(path.string(), original);
    const ModelState loaded = load_model_file(path.string());
    CHECK(loaded.blocks[0].weights.values == original.blocks[0].weights.values);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_model_file(path.string()), std::runtime_error);
}
