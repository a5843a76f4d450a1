#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fde/drift.hpp"
#include "fde/explain.hpp"
#include "fde/models.hpp"
#include "fde/synth.hpp"

#include "json.hpp"

namespace fde::experiment {

// Detector defaults for the harness. Batch-MAE streams are short (one value
// per `batch` windows), so the cut check runs every insertion instead of the
// sample-stream default of every 32.
struct DetectorOptions {
    double delta = 0.002;
    int clock = 1;
    int max_buckets = 5;
    int batch = 5;  // windows per MAE batch

    drift::AdwinConfig adwin() const {
        drift::AdwinConfig cfg;
        cfg.delta = delta;
        cfg.clock = clock;
        cfg.max_buckets = max_buckets;
        return cfg;
    }
};

struct ExperimentConfig {
    std::string dataset;  // raw csv path; empty when synthetic
    std::optional<synth::SyntheticSpec> synthetic;
    int runs = 30;
    std::uint64_t seed = 1;
    models::RegressorConfig regressor;
    models::AutoencoderConfig autoencoder;
    models::TrainSettings training;
    models::TrainSettings ae_training;
    DetectorOptions detector;
    double minkowski_order = 2.0;
    std::size_t latent_cap = 5000;
    std::size_t window_cap = 200;
    std::vector<Feature> scenarios = {Feature::co2, Feature::temperature, Feature::humidity,
                                      Feature::pressure, Feature::pir};
    double onset_fraction = 0.5;
    double magnitude = 2.0;
    std::string out_dir = "fde-out";

    ExperimentConfig() {
        ae_training.max_epochs = 0;  // 0 = follow `training`
    }
};

void validate(const ExperimentConfig& cfg);  // throws ConfigError

nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config_file(const std::string& path);

// FNV-1a over the canonical config serialization; ties every emitted number
// back to the exact configuration that produced it.
std::string config_hash(const ExperimentConfig& cfg);

struct ScenarioResult {
    Feature injected = Feature::co2;
    std::size_t onset_window = 0;
    std::vector<drift::Alarm> alarms;
    bool forced = false;
    std::size_t boundary_window = 0;
    double pre_mae = 0.0;
    double post_mae = 0.0;
    std::vector<double> batch_mae;
    Feature predicted = Feature::co2;
    double window_accuracy = 0.0;
    bool majority_correct = false;
    std::array<double, kNumFeatures> mean_distance{};
    std::vector<std::array<double, kNumFeatures>> window_scores;  // kept for co2 profile
    std::vector<explain::ChannelDiagnostic> channels;
};

struct RunResult {
    int run = 0;
    std::uint64_t data_seed = 0;
    std::uint64_t train_seed = 0;
    double test_mae_std = 0.0;
    double test_mae_raw = 0.0;
    double ae_mse = 0.0;
    double cnn_inference_us = 0.0;
    double ae_inference_us = 0.0;
    std::size_t train_windows = 0;
    std::size_t test_windows = 0;
    std::vector<ScenarioResult> scenarios;
};

struct Bundle {
    ExperimentConfig config;
    std::string hash;
    bool partial = false;
    std::string stage_error;
    std::vector<RunResult> runs;
};

Bundle run_experiment(const ExperimentConfig& cfg);

// Writes summary.json, table2.csv, table3.csv, fig2_<feature>.csv, fig3.csv,
// fig4.csv, manifest.json and bundle.json under out_dir. Deterministic except
// for the manifest timestamp. Returns the file paths.
std::vector<std::string> emit_report(const Bundle& bundle, const std::string& out_dir);

nlohmann::json bundle_to_json(const Bundle& bundle);
Bundle bundle_from_json(const nlohmann::json& j);
Bundle load_bundle_file(const std::string& path);

// Aggregates used by both summary emission and the acceptance suite.
struct FeatureAccuracy {
    Feature feature = Feature::co2;
    double window_accuracy_mean = 0.0;
    double window_accuracy_std = 0.0;
    double majority_accuracy = 0.0;
    double forced_fraction = 0.0;
    int runs = 0;
};

std::vector<FeatureAccuracy> aggregate_accuracy(const Bundle& bundle);
double overall_majority_accuracy(const Bundle& bundle);

}  // namespace fde::experiment
