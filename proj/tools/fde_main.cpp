// fde: end-to-end driver for the feature-drift-explanation pipeline.
// Subcommands: synth, prep, train, inject, detect, explain, run, report.
// Exit codes: 0 ok, 1 config error, 2 data error, 3 training failure,
// 4 partial result bundle.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "fde/data.hpp"
#include "fde/drift.hpp"
#include "fde/experiment.hpp"
#include "fde/explain.hpp"
#include "fde/models.hpp"
#include "fde/synth.hpp"

namespace fs = std::filesystem;
using namespace fde;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitData = 2;
constexpr int kExitTraining = 3;
constexpr int kExitPartial = 4;

std::string default_out_dir(const std::string& fallback) {
    if (const char* env = std::getenv("FDE_OUT_DIR")) {
        if (*env) return env;
    }
    return fallback;
}

struct PrepArtifacts {
    data::DatasetMeta meta;
    std::vector<data::Window> raw_windows;
    std::vector<data::Window> train_std;
    std::vector<data::Window> test_std;
};

PrepArtifacts load_prep(const std::string& prep_dir) {
    PrepArtifacts art;
    auto frames = data::read_processed_csv((fs::path(prep_dir) / "processed.csv").string());
    art.meta = data::read_meta_json((fs::path(prep_dir) / "meta.json").string());
    art.raw_windows = data::make_all_windows(frames, art.meta.history, art.meta.horizon);
    std::vector<data::Window> train_raw, test_raw;
    for (auto i : art.meta.split.train) train_raw.push_back(art.raw_windows.at(i));
    for (auto i : art.meta.split.test) test_raw.push_back(art.raw_windows.at(i));
    art.train_std = data::standardize_windows(train_raw, art.meta.scaler);
    art.test_std = data::standardize_windows(test_raw, art.meta.scaler);
    return art;
}

int cmd_synth(const std::string& out, const synth::SyntheticSpec& spec) {
    auto frame = synth::generate_synthetic(spec);
    synth::write_raw_csv(frame, out);
    std::printf("wrote %zu rows to %s\n", frame.rows.size(), out.c_str());
    return kExitOk;
}

int cmd_prep(const std::string& input, const std::string& out_dir, double quantile) {
    auto ingest = data::ingest_csv(input);
    for (const auto& w : ingest.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    if (ingest.records.empty()) throw DataError("no usable rows in " + input);
    auto series = data::resample_and_interpolate(std::move(ingest.records));
    auto frames = data::segment_chunks(series);
    if (frames.empty()) throw DataError("no 60-minute continuous chunks in " + input);

    auto windows = data::make_all_windows(frames);
    std::vector<std::string> warnings;
    data::DatasetMeta meta;
    meta.quantile = quantile;
    meta.split = data::split_challenging_test(windows, quantile, &warnings);
    for (const auto& w : warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    std::vector<data::Window> train_raw;
    for (auto i : meta.split.train) train_raw.push_back(windows[i]);
    meta.scaler = data::Scaler::fit_from_windows(train_raw);
    meta.source_rows = ingest.records.size();
    meta.skipped_rows = ingest.skipped;

    fs::create_directories(out_dir);
    data::write_processed_csv(frames, (fs::path(out_dir) / "processed.csv").string());
    data::write_meta_json(meta, (fs::path(out_dir) / "meta.json").string());
    std::printf("chunks=%zu windows=%zu train=%zu test=%zu skipped_rows=%zu\n", frames.size(),
                windows.size(), meta.split.train.size(), meta.split.test.size(), ingest.skipped);
    return kExitOk;
}

int cmd_train(const std::string& prep_dir, const std::string& out_dir, std::uint64_t seed,
              const models::TrainSettings& settings, int ae_epochs) {
    auto art = load_prep(prep_dir);
    fs::create_directories(out_dir);

    models::Regressor regressor = models::make_regressor({}, derive_seed(seed, 1));
    auto reg_log = models::train_regressor(regressor, art.train_std, settings, derive_seed(seed, 2));
    nn::save_network(regressor.net, (fs::path(out_dir) / "regressor.json").string());
    nn::write_train_log_csv(reg_log, (fs::path(out_dir) / "regressor_log.csv").string());

    auto acts = models::capture_all_activations(regressor, art.train_std);
    models::Autoencoder ae = models::make_autoencoder({}, derive_seed(seed, 3));
    models::TrainSettings ae_settings = settings;
    if (ae_epochs > 0) ae_settings.max_epochs = ae_epochs;
    auto ae_log = models::train_autoencoder(ae, acts, ae_settings, derive_seed(seed, 4));
    nn::save_network(ae.net, (fs::path(out_dir) / "autoencoder.json").string());
    nn::write_train_log_csv(ae_log, (fs::path(out_dir) / "autoencoder_log.csv").string());

    double mae_std = models::mean_absolute_error(regressor, art.test_std);
    double mae_raw = mae_std * art.meta.scaler.stddev(Feature::co2);
    auto test_acts = models::capture_all_activations(regressor, art.test_std);
    double ae_mse = models::mean_reconstruction_mse(ae, test_acts);
    std::printf("test_mae_std=%.6g test_mae_raw=%.6g ae_reconstruction_mse=%.6g\n", mae_std,
                mae_raw, ae_mse);
    return kExitOk;
}

int cmd_inject(const std::string& prep_dir, const std::string& feature, std::int64_t onset,
               double onset_fraction, double magnitude, const std::string& out,
               const std::string& scenario_out) {
    auto art = load_prep(prep_dir);
    drift::DriftScenario scenario;
    scenario.feature = require_feature(feature);
    scenario.magnitude = magnitude;
    std::size_t n = art.test_std.size();
    scenario.onset = onset >= 0 ? static_cast<std::size_t>(onset)
                                : static_cast<std::size_t>(onset_fraction * n);
    auto corrupted = drift::inject_outlier_drift(art.test_std, scenario, art.meta.scaler, true);
    data::write_windows_csv(corrupted, out);
    if (!scenario_out.empty()) drift::write_scenario_json(scenario, scenario_out);
    std::printf("injected %s drift at window %zu of %zu -> %s\n", feature_name(scenario.feature),
                scenario.onset, n, out.c_str());
    return kExitOk;
}

int cmd_detect(const std::string& prep_dir, const std::string& models_dir,
               const std::string& windows_path, const std::string& out_dir,
               const experiment::DetectorOptions& detector) {
    auto art = load_prep(prep_dir);
    auto regressor = models::load_regressor((fs::path(models_dir) / "regressor.json").string());
    auto windows = windows_path.empty() ? art.test_std : data::read_windows_csv(windows_path);

    std::vector<double> abs_errors;
    abs_errors.reserve(windows.size());
    for (const auto& w : windows) {
        abs_errors.push_back(std::fabs(models::predict(regressor, w) - w.target));
    }
    auto stream = drift::batch_mae_stream(abs_errors, detector.batch);
    auto alarms = drift::detect(stream, detector.adwin());

    fs::create_directories(out_dir);
    drift::write_alarm_csv(alarms, (fs::path(out_dir) / "alarms.csv").string());
    {
        std::ofstream out((fs::path(out_dir) / "stream.csv").string());
        out << "batch_index,mae\n";
        for (std::size_t b = 0; b < stream.batch_mae.size(); ++b) {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", b, stream.batch_mae[b]);
            out << buf;
        }
    }
    std::printf("batches=%zu alarms=%zu\n", stream.batch_mae.size(), alarms.size());
    for (const auto& a : alarms) {
        std::printf("alarm batch=%zu window=%zu mean %.4g -> %.4g\n", a.batch_index,
                    a.window_index, a.mean_before, a.mean_after);
    }
    return kExitOk;
}

int cmd_explain(const std::string& prep_dir, const std::string& models_dir,
                const std::string& windows_path, const std::string& out_dir, std::int64_t onset,
                double order, std::size_t latent_cap, std::size_t window_cap,
                const experiment::DetectorOptions& detector, std::uint64_t seed) {
    auto art = load_prep(prep_dir);
    auto regressor = models::load_regressor((fs::path(models_dir) / "regressor.json").string());
    auto autoencoder =
        models::load_autoencoder((fs::path(models_dir) / "autoencoder.json").string());
    auto windows = data::read_windows_csv(windows_path);
    if (windows.empty()) throw DataError("no windows in " + windows_path);

    bool forced = onset >= 0;
    std::size_t boundary = 0;
    std::vector<drift::Alarm> alarms;
    if (forced) {
        boundary = static_cast<std::size_t>(onset);
    } else {
        std::vector<double> abs_errors;
        for (const auto& w : windows) {
            abs_errors.push_back(std::fabs(models::predict(regressor, w) - w.target));
        }
        alarms = drift::detect(drift::batch_mae_stream(abs_errors, detector.batch),
                               detector.adwin());
        if (alarms.empty()) {
            throw DataError("no drift detected; pass --onset to force a boundary");
        }
        boundary = alarms.front().window_index;
    }
    if (boundary >= windows.size()) throw ConfigError("boundary beyond the window stream");

    auto reference = explain::build_latent_reference(regressor, autoencoder, art.train_std,
                                                     latent_cap, derive_seed(seed, 5));
    std::vector<data::Window> drifting(windows.begin() + boundary, windows.end());
    if (window_cap > 0 && drifting.size() > window_cap) {
        std::vector<data::Window> capped;
        for (std::size_t k = 0; k < window_cap; ++k) {
            capped.push_back(drifting[k * drifting.size() / window_cap]);
        }
        drifting = std::move(capped);
    }
    auto report = explain::localize_drift(drifting, reference, regressor, autoencoder, order);
    report.forced = forced;
    report.alarms = alarms;

    fs::create_directories(out_dir);
    explain::write_report_json(report, (fs::path(out_dir) / "report.json").string());
    explain::write_distances_csv(report, (fs::path(out_dir) / "distances.csv").string());
    std::printf("predicted drifting feature: %s (%s)\n", feature_name(report.predicted),
                forced ? "forced boundary" : "detected boundary");
    return kExitOk;
}

int cmd_run(const experiment::ExperimentConfig& cfg) {
    auto bundle = experiment::run_experiment(cfg);
    auto files = experiment::emit_report(bundle, cfg.out_dir);
    std::printf("wrote %zu report files to %s\n", files.size(), cfg.out_dir.c_str());
    if (bundle.partial) {
        std::fprintf(stderr, "partial bundle: %s\n", bundle.stage_error.c_str());
        return kExitPartial;
    }
    auto accuracy = experiment::aggregate_accuracy(bundle);
    for (const auto& acc : accuracy) {
        std::printf("%-12s window_acc=%.3f +/- %.3f majority_acc=%.3f forced=%.2f\n",
                    feature_name(acc.feature), acc.window_accuracy_mean, acc.window_accuracy_std,
                    acc.majority_accuracy, acc.forced_fraction);
    }
    std::printf("overall majority accuracy: %.4f\n", experiment::overall_majority_accuracy(bundle));
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"feature drift explanation pipeline"};
    app.require_subcommand(1);

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic sensor csv");
    std::string synth_out = "synthetic.csv";
    synth::SyntheticSpec synth_spec;
    synth_cmd->add_option("--out", synth_out, "output csv path");
    synth_cmd->add_option("--length", synth_spec.length, "rows (minutes)");
    synth_cmd->add_option("--seed", synth_spec.seed, "generator seed");
    synth_cmd->add_option("--noise", synth_spec.noise_std, "target noise stddev");
    synth_cmd->add_option("--w1", synth_spec.w1, "co2 self-weight");
    synth_cmd->add_option("--w2", synth_spec.w2, "temperature weight");

    // prep
    auto* prep_cmd = app.add_subcommand("prep", "ingest, resample, chunk, window and split");
    std::string prep_input, prep_out = "prep";
    double prep_quantile = 0.8;
    prep_cmd->add_option("--input", prep_input, "raw sensor csv")->required();
    prep_cmd->add_option("--out-dir", prep_out, "output directory");
    prep_cmd->add_option("--quantile", prep_quantile, "challenging-test split quantile");

    // train
    auto* train_cmd = app.add_subcommand("train", "train the regressor and autoencoder");
    std::string train_prep = "prep", train_out = "models";
    std::uint64_t train_seed = 1;
    models::TrainSettings train_settings;
    int train_ae_epochs = 0;
    train_cmd->add_option("--prep-dir", train_prep, "prep output directory");
    train_cmd->add_option("--out-dir", train_out, "model output directory");
    train_cmd->add_option("--seed", train_seed, "training seed");
    train_cmd->add_option("--lr", train_settings.lr, "adam learning rate");
    train_cmd->add_option("--batch", train_settings.batch_size, "minibatch size");
    train_cmd->add_option("--epochs", train_settings.max_epochs, "max epochs");
    train_cmd->add_option("--patience", train_settings.patience, "early-stop patience");
    train_cmd->add_option("--ae-epochs", train_ae_epochs, "autoencoder max epochs (0 = same)");

    // inject
    auto* inject_cmd = app.add_subcommand("inject", "corrupt one feature of the test stream");
    std::string inject_prep = "prep", inject_feature, inject_out = "windows.csv",
                inject_scenario_out;
    std::int64_t inject_onset = -1;
    double inject_fraction = 0.5, inject_magnitude = 2.0;
    inject_cmd->add_option("--prep-dir", inject_prep, "prep output directory");
    inject_cmd->add_option("--feature", inject_feature, "feature to corrupt")->required();
    inject_cmd->add_option("--onset", inject_onset, "onset window index (-1 = use fraction)");
    inject_cmd->add_option("--onset-fraction", inject_fraction, "onset as a stream fraction");
    inject_cmd->add_option("--magnitude", inject_magnitude, "outlier magnitude in sigmas");
    inject_cmd->add_option("--out", inject_out, "corrupted windows csv");
    inject_cmd->add_option("--scenario-out", inject_scenario_out, "scenario json path");

    // detect
    auto* detect_cmd = app.add_subcommand("detect", "run the change detector on the error stream");
    std::string detect_prep = "prep", detect_models = "models", detect_windows,
                detect_out = default_out_dir("detect-out");
    experiment::DetectorOptions detect_opts;
    detect_cmd->add_option("--prep-dir", detect_prep, "prep output directory");
    detect_cmd->add_option("--models-dir", detect_models, "trained model directory");
    detect_cmd->add_option("--windows", detect_windows, "windows csv (default: clean test set)");
    detect_cmd->add_option("--out-dir", detect_out, "output directory");
    detect_cmd->add_option("--delta", detect_opts.delta, "detector confidence");
    detect_cmd->add_option("--batch", detect_opts.batch, "windows per MAE batch");

    // explain
    auto* explain_cmd = app.add_subcommand("explain", "localize the drifting feature");
    std::string explain_prep = "prep", explain_models = "models", explain_windows,
                explain_out = default_out_dir("explain-out");
    std::int64_t explain_onset = -1;
    double explain_order = 2.0;
    std::size_t explain_latent_cap = 5000, explain_window_cap = 200;
    std::uint64_t explain_seed = 1;
    experiment::DetectorOptions explain_detector;
    explain_cmd->add_option("--prep-dir", explain_prep, "prep output directory");
    explain_cmd->add_option("--models-dir", explain_models, "trained model directory");
    explain_cmd->add_option("--windows", explain_windows, "windows csv to explain")->required();
    explain_cmd->add_option("--out-dir", explain_out, "output directory");
    explain_cmd->add_option("--onset", explain_onset, "forced drift boundary (-1 = detect)");
    explain_cmd->add_option("--order", explain_order, "minkowski order");
    explain_cmd->add_option("--latent-cap", explain_latent_cap, "max reference latents");
    explain_cmd->add_option("--window-cap", explain_window_cap, "max scored windows");
    explain_cmd->add_option("--seed", explain_seed, "subsampling seed");

    // run
    auto* run_cmd = app.add_subcommand("run", "end-to-end experiment with report emission");
    std::string run_config;
    experiment::ExperimentConfig run_cfg;
    run_cfg.out_dir = default_out_dir(run_cfg.out_dir);
    std::string run_dataset, run_scenarios, run_out;
    std::int64_t run_runs = -1, run_epochs = -1, run_length = -1;
    std::int64_t run_seed = -1;
    run_cmd->add_option("--config", run_config, "config json file");
    run_cmd->add_option("--dataset", run_dataset, "raw sensor csv");
    run_cmd->add_option("--synthetic-length", run_length, "use a synthetic dataset of this size");
    run_cmd->add_option("--runs", run_runs, "number of seeded runs");
    run_cmd->add_option("--seed", run_seed, "master seed");
    run_cmd->add_option("--epochs", run_epochs, "max training epochs");
    run_cmd->add_option("--scenarios", run_scenarios, "comma-separated feature list");
    run_cmd->add_option("--out-dir", run_out, "report directory");

    // report
    auto* report_cmd = app.add_subcommand("report", "re-emit report files from a saved bundle");
    std::string report_bundle, report_out = default_out_dir("fde-out");
    report_cmd->add_option("--bundle", report_bundle, "bundle.json path")->required();
    report_cmd->add_option("--out-dir", report_out, "report directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (synth_cmd->parsed()) return cmd_synth(synth_out, synth_spec);
        if (prep_cmd->parsed()) return cmd_prep(prep_input, prep_out, prep_quantile);
        if (train_cmd->parsed()) {
            return cmd_train(train_prep, train_out, train_seed, train_settings, train_ae_epochs);
        }
        if (inject_cmd->parsed()) {
            return cmd_inject(inject_prep, inject_feature, inject_onset, inject_fraction,
                              inject_magnitude, inject_out, inject_scenario_out);
        }
        if (detect_cmd->parsed()) {
            return cmd_detect(detect_prep, detect_models, detect_windows, detect_out, detect_opts);
        }
        if (explain_cmd->parsed()) {
            return cmd_explain(explain_prep, explain_models, explain_windows, explain_out,
                               explain_onset, explain_order, explain_latent_cap,
                               explain_window_cap, explain_detector, explain_seed);
        }
        if (run_cmd->parsed()) {
            if (!run_config.empty()) run_cfg = experiment::load_config_file(run_config);
            if (!run_dataset.empty()) run_cfg.dataset = run_dataset;
            if (run_length > 0) {
                synth::SyntheticSpec spec =
                    run_cfg.synthetic.value_or(synth::SyntheticSpec{});
                spec.length = static_cast<std::size_t>(run_length);
                run_cfg.synthetic = spec;
            }
            if (run_runs > 0) run_cfg.runs = static_cast<int>(run_runs);
            if (run_seed >= 0) run_cfg.seed = static_cast<std::uint64_t>(run_seed);
            if (run_epochs > 0) {
                run_cfg.training.max_epochs = static_cast<int>(run_epochs);
            }
            if (!run_scenarios.empty()) {
                run_cfg.scenarios.clear();
                std::string token;
                for (char c : run_scenarios + ",") {
                    if (c == ',') {
                        if (!token.empty()) run_cfg.scenarios.push_back(require_feature(token));
                        token.clear();
                    } else {
                        token += c;
                    }
                }
            }
            if (!run_out.empty()) run_cfg.out_dir = run_out;
            return cmd_run(run_cfg);
        }
        if (report_cmd->parsed()) {
            auto bundle = experiment::load_bundle_file(report_bundle);
            auto files = experiment::emit_report(bundle, report_out);
            std::printf("wrote %zu report files to %s\n", files.size(), report_out.c_str());
            return bundle.partial ? kExitPartial : kExitOk;
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const TrainingError& e) {
        std::fprintf(stderr, "training error: %s\n", e.what());
        return kExitTraining;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return kExitData;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitData;
    }
    return kExitConfig;
}
