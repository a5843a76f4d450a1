#include "fde/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>

#include "fde/kernels.hpp"

namespace fde::experiment {

namespace {

constexpr int kHistory = 5;
constexpr int kHorizon = 5;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

nlohmann::json training_to_json(const models::TrainSettings& t) {
    return {{"lr", t.lr},
            {"batch_size", t.batch_size},
            {"max_epochs", t.max_epochs},
            {"patience", t.patience},
            {"val_fraction", t.val_fraction}};
}

models::TrainSettings training_from_json(const nlohmann::json& j, models::TrainSettings base) {
    base.lr = j.value("lr", base.lr);
    base.batch_size = j.value("batch_size", base.batch_size);
    base.max_epochs = j.value("max_epochs", base.max_epochs);
    base.patience = j.value("patience", base.patience);
    base.val_fraction = j.value("val_fraction", base.val_fraction);
    return base;
}

struct PreparedData {
    data::Scaler scaler;
    std::vector<data::Window> train_windows;  // standardized, temporal order
    std::vector<data::Window> test_windows;   // standardized, temporal order
};

PreparedData prepare(const std::vector<data::TimeSeriesFrame>& frames) {
    auto windows = data::make_all_windows(frames, kHistory, kHorizon);
    auto split = data::split_challenging_test(windows);
    std::vector<data::Window> train_raw, test_raw;
    train_raw.reserve(split.train.size());
    test_raw.reserve(split.test.size());
    for (auto i : split.train) train_raw.push_back(windows[i]);
    for (auto i : split.test) test_raw.push_back(windows[i]);
    if (test_raw.empty()) throw DataError("prepared dataset has an empty test split");
    PreparedData prep;
    prep.scaler = data::Scaler::fit_from_windows(train_raw);
    prep.train_windows = data::standardize_windows(train_raw, prep.scaler);
    prep.test_windows = data::standardize_windows(test_raw, prep.scaler);
    return prep;
}

std::vector<data::TimeSeriesFrame> load_real_dataset(const std::string& path) {
    auto ingest = data::ingest_csv(path);
    if (ingest.records.empty()) throw DataError("dataset has no usable rows: " + path);
    auto series = data::resample_and_interpolate(std::move(ingest.records));
    auto frames = data::segment_chunks(series);
    if (frames.empty()) throw DataError("dataset has no 60-minute continuous chunks: " + path);
    return frames;
}

// Deterministic evenly spaced subset of [0, n).
std::vector<std::size_t> spaced_indices(std::size_t n, std::size_t cap) {
    std::vector<std::size_t> idx;
    if (cap == 0 || n <= cap) {
        idx.resize(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        return idx;
    }
    idx.reserve(cap);
    for (std::size_t k = 0; k < cap; ++k) {
        idx.push_back(k * n / cap);
    }
    return idx;
}

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double acc = 0.0;
    for (double x : v) acc += x;
    return acc / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double m = mean_of(v);
    double acc = 0.0;
    for (double x : v) acc += (x - m) * (x - m);
    return std::sqrt(acc / static_cast<double>(v.size()));
}

}  // namespace

void validate(const ExperimentConfig& cfg) {
    if (cfg.runs < 1) throw ConfigError("runs must be >= 1");
    if (cfg.dataset.empty() && !cfg.synthetic) {
        throw ConfigError("missing dataset path and no synthetic spec");
    }
    if (cfg.scenarios.empty()) throw ConfigError("at least one drift scenario required");
    if (cfg.minkowski_order < 1.0) throw ConfigError("minkowski order must be >= 1");
    if (cfg.onset_fraction < 0.0 || cfg.onset_fraction >= 1.0) {
        throw ConfigError("onset fraction must be in [0,1)");
    }
    if (!(std::fabs(cfg.magnitude) > 0.0) || !std::isfinite(cfg.magnitude)) {
        throw ConfigError("drift magnitude must be finite and non-zero");
    }
    if (cfg.detector.batch < 1) throw ConfigError("detector batch must be >= 1");
}

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
    nlohmann::json scenarios = nlohmann::json::array();
    for (Feature f : cfg.scenarios) scenarios.push_back(feature_name(f));
    nlohmann::json j = {
        {"dataset", cfg.dataset},
        {"runs", cfg.runs},
        {"seed", cfg.seed},
        {"model",
         {{"channels", cfg.regressor.channels},
          {"hidden", cfg.regressor.hidden},
          {"latent", cfg.autoencoder.latent},
          {"ae_hidden", cfg.autoencoder.hidden}}},
        {"training", training_to_json(cfg.training)},
        {"ae_training", training_to_json(cfg.ae_training)},
        {"detector",
         {{"delta", cfg.detector.delta},
          {"clock", cfg.detector.clock},
          {"max_buckets", cfg.detector.max_buckets},
          {"batch", cfg.detector.batch}}},
        {"minkowski_order", cfg.minkowski_order},
        {"latent_cap", cfg.latent_cap},
        {"window_cap", cfg.window_cap},
        {"scenarios", scenarios},
        {"onset_fraction", cfg.onset_fraction},
        {"magnitude", cfg.magnitude},
        {"out_dir", cfg.out_dir},
    };
    if (cfg.synthetic) {
        const auto& s = *cfg.synthetic;
        j["synthetic"] = {{"length", s.length},
                          {"seed", s.seed},
                          {"w1", s.w1},
                          {"w2", s.w2},
                          {"noise_std", s.noise_std},
                          {"ar_coeff", s.ar_coeff},
                          {"ar_mean", s.ar_mean},
                          {"innovation_std", s.innovation_std},
                          {"co2_init_mean", s.co2_init_mean},
                          {"co2_init_std", s.co2_init_std}};
    }
    return j;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
    ExperimentConfig cfg;
    cfg.dataset = j.value("dataset", cfg.dataset);
    cfg.runs = j.value("runs", cfg.runs);
    cfg.seed = j.value("seed", cfg.seed);
    if (j.contains("model")) {
        const auto& m = j.at("model");
        cfg.regressor.channels = m.value("channels", cfg.regressor.channels);
        cfg.regressor.hidden = m.value("hidden", cfg.regressor.hidden);
        cfg.autoencoder.latent = m.value("latent", cfg.autoencoder.latent);
        cfg.autoencoder.hidden = m.value("ae_hidden", cfg.autoencoder.hidden);
        cfg.autoencoder.input = cfg.regressor.activation_size();
    }
    if (j.contains("training")) cfg.training = training_from_json(j.at("training"), cfg.training);
    if (j.contains("ae_training")) {
        cfg.ae_training = training_from_json(j.at("ae_training"), cfg.ae_training);
    }
    if (j.contains("detector")) {
        const auto& d = j.at("detector");
        cfg.detector.delta = d.value("delta", cfg.detector.delta);
        cfg.detector.clock = d.value("clock", cfg.detector.clock);
        cfg.detector.max_buckets = d.value("max_buckets", cfg.detector.max_buckets);
        cfg.detector.batch = d.value("batch", cfg.detector.batch);
    }
    cfg.minkowski_order = j.value("minkowski_order", cfg.minkowski_order);
    cfg.latent_cap = j.value("latent_cap", cfg.latent_cap);
    cfg.window_cap = j.value("window_cap", cfg.window_cap);
    if (j.contains("scenarios")) {
        cfg.scenarios.clear();
        for (const auto& s : j.at("scenarios")) {
            cfg.scenarios.push_back(require_feature(s.get<std::string>()));
        }
    }
    cfg.onset_fraction = j.value("onset_fraction", cfg.onset_fraction);
    cfg.magnitude = j.value("magnitude", cfg.magnitude);
    cfg.out_dir = j.value("out_dir", cfg.out_dir);
    if (j.contains("synthetic") && !j.at("synthetic").is_null()) {
        const auto& s = j.at("synthetic");
        synth::SyntheticSpec spec;
        spec.length = s.value("length", spec.length);
        spec.seed = s.value("seed", spec.seed);
        spec.w1 = s.value("w1", spec.w1);
        spec.w2 = s.value("w2", spec.w2);
        spec.noise_std = s.value("noise_std", spec.noise_std);
        spec.ar_coeff = s.value("ar_coeff", spec.ar_coeff);
        spec.ar_mean = s.value("ar_mean", spec.ar_mean);
        spec.innovation_std = s.value("innovation_std", spec.innovation_std);
        spec.co2_init_mean = s.value("co2_init_mean", spec.co2_init_mean);
        spec.co2_init_std = s.value("co2_init_std", spec.co2_init_std);
        cfg.synthetic = spec;
    }
    return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return config_from_json(j);
}

std::string config_hash(const ExperimentConfig& cfg) {
    std::string canon = config_to_json(cfg).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canon) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

ScenarioResult run_scenario(const ExperimentConfig& cfg, const PreparedData& prep,
                            const models::Regressor& regressor,
                            const models::Autoencoder& autoencoder,
                            const explain::LatentReference& reference, Feature injected,
                            std::uint64_t scenario_seed) {
    ScenarioResult result;
    result.injected = injected;
    const std::size_t n_test = prep.test_windows.size();
    result.onset_window = static_cast<std::size_t>(
        std::floor(cfg.onset_fraction * static_cast<double>(n_test)));
    if (result.onset_window >= n_test) result.onset_window = n_test - 1;

    drift::DriftScenario scenario{injected, result.onset_window, cfg.magnitude, scenario_seed};
    auto corrupted = drift::inject_outlier_drift(prep.test_windows, scenario, prep.scaler, true);

    // per-window absolute error stream against the true targets
    std::vector<double> abs_errors(corrupted.size());
    for (std::size_t i = 0; i < corrupted.size(); ++i) {
        abs_errors[i] = std::fabs(models::predict(regressor, corrupted[i]) - corrupted[i].target);
    }
    double pre = 0.0, post = 0.0;
    for (std::size_t i = 0; i < abs_errors.size(); ++i) {
        (i < result.onset_window ? pre : post) += abs_errors[i];
    }
    result.pre_mae = result.onset_window ? pre / static_cast<double>(result.onset_window) : 0.0;
    result.post_mae = post / static_cast<double>(abs_errors.size() - result.onset_window);

    auto stream = drift::batch_mae_stream(abs_errors, cfg.detector.batch);
    result.batch_mae = stream.batch_mae;
    result.alarms = drift::detect(stream, cfg.detector.adwin());

    // section boundary: first alarm at or past the onset; otherwise fall back
    // to the known onset and mark the report as forced
    result.forced = true;
    result.boundary_window = result.onset_window;
    for (const auto& a : result.alarms) {
        if (a.window_index >= result.onset_window) {
            result.boundary_window = std::min(a.window_index, n_test - 1);
            result.forced = false;
            break;
        }
    }

    std::vector<data::Window> drifting(corrupted.begin() + result.boundary_window, corrupted.end());
    std::vector<data::Window> scored;
    for (std::size_t i : spaced_indices(drifting.size(), cfg.window_cap)) {
        scored.push_back(drifting[i]);
    }
    auto report =
        explain::localize_drift(scored, reference, regressor, autoencoder, cfg.minkowski_order);
    result.predicted = report.predicted;
    double correct = 0.0;
    for (Feature f : report.per_window_argmin) correct += (f == injected) ? 1.0 : 0.0;
    result.window_accuracy = correct / static_cast<double>(report.per_window_argmin.size());
    result.majority_correct = report.predicted == injected;
    for (int q = 0; q < kNumFeatures; ++q) {
        result.mean_distance[q] = report.features[q].mean_distance;
    }
    result.window_scores = std::move(report.per_window_scores);

    // channel diagnostics: clean pre-onset activations vs corrupted section
    std::vector<data::Window> normal_section(prep.test_windows.begin(),
                                             prep.test_windows.begin() + result.onset_window);
    if (normal_section.empty()) {
        normal_section.assign(prep.test_windows.begin(), prep.test_windows.begin() + 1);
    }
    std::vector<data::Window> normal_capped, drift_capped;
    for (std::size_t i : spaced_indices(normal_section.size(), cfg.window_cap)) {
        normal_capped.push_back(normal_section[i]);
    }
    for (std::size_t i : spaced_indices(drifting.size(), cfg.window_cap)) {
        drift_capped.push_back(drifting[i]);
    }
    result.channels = explain::channel_reconstruction_diff(
        autoencoder, models::capture_all_activations(regressor, normal_capped),
        models::capture_all_activations(regressor, drift_capped), cfg.regressor.channels,
        cfg.regressor.history);
    return result;
}

}  // namespace

Bundle run_experiment(const ExperimentConfig& cfg) {
    validate(cfg);
    Bundle bundle;
    bundle.config = cfg;
    bundle.hash = config_hash(cfg);

    std::string stage = "prep";
    try {
        std::vector<data::TimeSeriesFrame> real_frames;
        std::optional<PreparedData> real_prep;
        if (!cfg.dataset.empty()) {
            real_frames = load_real_dataset(cfg.dataset);
            real_prep = prepare(real_frames);
        }

        for (int run = 0; run < cfg.runs; ++run) {
            stage = "run " + std::to_string(run);
            RunResult rr;
            rr.run = run;
            rr.data_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(run) * 4 + 0);
            rr.train_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(run) * 4 + 1);

            PreparedData prep;
            if (real_prep) {
                prep = *real_prep;
            } else {
                synth::SyntheticSpec spec = *cfg.synthetic;
                spec.seed = rr.data_seed;
                prep = prepare({synth::generate_synthetic(spec)});
            }
            rr.train_windows = prep.train_windows.size();
            rr.test_windows = prep.test_windows.size();

            stage = "train run " + std::to_string(run);
            models::Regressor regressor =
                models::make_regressor(cfg.regressor, derive_seed(rr.train_seed, 1));
            models::train_regressor(regressor, prep.train_windows, cfg.training,
                                    derive_seed(rr.train_seed, 2));

            auto train_acts = models::capture_all_activations(regressor, prep.train_windows);
            models::AutoencoderConfig ae_cfg = cfg.autoencoder;
            ae_cfg.input = cfg.regressor.activation_size();
            models::Autoencoder autoencoder =
                models::make_autoencoder(ae_cfg, derive_seed(rr.train_seed, 3));
            models::TrainSettings ae_train = cfg.ae_training;
            if (ae_train.max_epochs <= 0) ae_train = cfg.training;
            models::train_autoencoder(autoencoder, train_acts, ae_train,
                                      derive_seed(rr.train_seed, 4));

            stage = "evaluate run " + std::to_string(run);
            {
                auto t0 = std::chrono::steady_clock::now();
                rr.test_mae_std = models::mean_absolute_error(regressor, prep.test_windows);
                auto t1 = std::chrono::steady_clock::now();
                rr.cnn_inference_us =
                    std::chrono::duration<double, std::micro>(t1 - t0).count() /
                    static_cast<double>(prep.test_windows.size());
            }
            rr.test_mae_raw = rr.test_mae_std * prep.scaler.stddev(Feature::co2);
            {
                auto test_acts = models::capture_all_activations(regressor, prep.test_windows);
                auto t0 = std::chrono::steady_clock::now();
                rr.ae_mse = models::mean_reconstruction_mse(autoencoder, test_acts);
                auto t1 = std::chrono::steady_clock::now();
                rr.ae_inference_us = std::chrono::duration<double, std::micro>(t1 - t0).count() /
                                     static_cast<double>(test_acts.size());
            }

            auto reference = explain::build_latent_reference(
                regressor, autoencoder, prep.train_windows, cfg.latent_cap,
                derive_seed(rr.train_seed, 5));

            for (std::size_t s = 0; s < cfg.scenarios.size(); ++s) {
                stage = "scenario " + std::string(feature_name(cfg.scenarios[s])) + " run " +
                        std::to_string(run);
                rr.scenarios.push_back(run_scenario(cfg, prep, regressor, autoencoder, reference,
                                                    cfg.scenarios[s],
                                                    derive_seed(rr.train_seed, 100 + s)));
            }
            bundle.runs.push_back(std::move(rr));
        }
    } catch (const ConfigError&) {
        throw;  // configuration problems are not partial results
    } catch (const std::exception& e) {
        bundle.partial = true;
        bundle.stage_error = stage + ": " + e.what();
    }
    return bundle;
}

std::vector<FeatureAccuracy> aggregate_accuracy(const Bundle& bundle) {
    std::vector<FeatureAccuracy> out;
    for (Feature f : bundle.config.scenarios) {
        FeatureAccuracy acc;
        acc.feature = f;
        std::vector<double> window_acc;
        double majority = 0.0, forced = 0.0;
        for (const auto& run : bundle.runs) {
            for (const auto& sc : run.scenarios) {
                if (sc.injected != f) continue;
                window_acc.push_back(sc.window_accuracy);
                majority += sc.majority_correct ? 1.0 : 0.0;
                forced += sc.forced ? 1.0 : 0.0;
            }
        }
        acc.runs = static_cast<int>(window_acc.size());
        if (acc.runs > 0) {
            acc.window_accuracy_mean = mean_of(window_acc);
            acc.window_accuracy_std = std_of(window_acc);
            acc.majority_accuracy = majority / acc.runs;
            acc.forced_fraction = forced / acc.runs;
        }
        out.push_back(acc);
    }
    return out;
}

double overall_majority_accuracy(const Bundle& bundle) {
    double correct = 0.0;
    double total = 0.0;
    for (const auto& run : bundle.runs) {
        for (const auto& sc : run.scenarios) {
            correct += sc.majority_correct ? 1.0 : 0.0;
            total += 1.0;
        }
    }
    return total > 0.0 ? correct / total : 0.0;
}

namespace {

nlohmann::json scenario_to_json(const ScenarioResult& sc) {
    nlohmann::json alarms = nlohmann::json::array();
    for (const auto& a : sc.alarms) {
        alarms.push_back({{"batch_index", a.batch_index},
                          {"window_index", a.window_index},
                          {"mean_before", a.mean_before},
                          {"mean_after", a.mean_after}});
    }
    nlohmann::json channels = nlohmann::json::array();
    for (const auto& ch : sc.channels) {
        channels.push_back({{"channel", ch.channel},
                            {"normal_loss", ch.normal_loss},
                            {"drift_loss", ch.drift_loss},
                            {"pct_diff", ch.undefined ? nlohmann::json() : nlohmann::json(ch.pct_diff)},
                            {"undefined", ch.undefined}});
    }
    nlohmann::json scores = nlohmann::json::array();
    for (const auto& row : sc.window_scores) scores.push_back(row);
    return {{"injected", feature_name(sc.injected)},
            {"onset_window", sc.onset_window},
            {"alarms", alarms},
            {"forced", sc.forced},
            {"boundary_window", sc.boundary_window},
            {"pre_mae", sc.pre_mae},
            {"post_mae", sc.post_mae},
            {"batch_mae", sc.batch_mae},
            {"predicted", feature_name(sc.predicted)},
            {"window_accuracy", sc.window_accuracy},
            {"majority_correct", sc.majority_correct},
            {"mean_distance", sc.mean_distance},
            {"window_scores", scores},
            {"channels", channels}};
}

ScenarioResult scenario_from_json(const nlohmann::json& j) {
    ScenarioResult sc;
    sc.injected = require_feature(j.at("injected").get<std::string>());
    sc.onset_window = j.at("onset_window").get<std::size_t>();
    for (const auto& a : j.at("alarms")) {
        sc.alarms.push_back({a.at("batch_index").get<std::size_t>(),
                             a.at("window_index").get<std::size_t>(),
                             a.at("mean_before").get<double>(), a.at("mean_after").get<double>()});
    }
    sc.forced = j.at("forced").get<bool>();
    sc.boundary_window = j.at("boundary_window").get<std::size_t>();
    sc.pre_mae = j.at("pre_mae").get<double>();
    sc.post_mae = j.at("post_mae").get<double>();
    sc.batch_mae = j.at("batch_mae").get<std::vector<double>>();
    sc.predicted = require_feature(j.at("predicted").get<std::string>());
    sc.window_accuracy = j.at("window_accuracy").get<double>();
    sc.majority_correct = j.at("majority_correct").get<bool>();
    sc.mean_distance = j.at("mean_distance").get<std::array<double, kNumFeatures>>();
    for (const auto& row : j.at("window_scores")) {
        sc.window_scores.push_back(row.get<std::array<double, kNumFeatures>>());
    }
    for (const auto& c : j.at("channels")) {
        explain::ChannelDiagnostic ch;
        ch.channel = c.at("channel").get<int>();
        ch.normal_loss = c.at("normal_loss").get<double>();
        ch.drift_loss = c.at("drift_loss").get<double>();
        ch.undefined = c.at("undefined").get<bool>();
        ch.pct_diff = ch.undefined ? 0.0 : c.at("pct_diff").get<double>();
        sc.channels.push_back(ch);
    }
    return sc;
}

}  // namespace

nlohmann::json bundle_to_json(const Bundle& bundle) {
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& run : bundle.runs) {
        nlohmann::json scenarios = nlohmann::json::array();
        for (const auto& sc : run.scenarios) scenarios.push_back(scenario_to_json(sc));
        runs.push_back({{"run", run.run},
                        {"data_seed", run.data_seed},
                        {"train_seed", run.train_seed},
                        {"test_mae_std", run.test_mae_std},
                        {"test_mae_raw", run.test_mae_raw},
                        {"ae_mse", run.ae_mse},
                        {"cnn_inference_us", run.cnn_inference_us},
                        {"ae_inference_us", run.ae_inference_us},
                        {"train_windows", run.train_windows},
                        {"test_windows", run.test_windows},
                        {"scenarios", scenarios}});
    }
    return {{"format_version", 1},
            {"config", config_to_json(bundle.config)},
            {"config_hash", bundle.hash},
            {"partial", bundle.partial},
            {"stage_error", bundle.stage_error},
            {"runs", runs}};
}

Bundle bundle_from_json(const nlohmann::json& j) {
    Bundle bundle;
    bundle.config = config_from_json(j.at("config"));
    bundle.hash = j.at("config_hash").get<std::string>();
    bundle.partial = j.at("partial").get<bool>();
    bundle.stage_error = j.at("stage_error").get<std::string>();
    for (const auto& rj : j.at("runs")) {
        RunResult run;
        run.run = rj.at("run").get<int>();
        run.data_seed = rj.at("data_seed").get<std::uint64_t>();
        run.train_seed = rj.at("train_seed").get<std::uint64_t>();
        run.test_mae_std = rj.at("test_mae_std").get<double>();
        run.test_mae_raw = rj.at("test_mae_raw").get<double>();
        run.ae_mse = rj.at("ae_mse").get<double>();
        run.cnn_inference_us = rj.at("cnn_inference_us").get<double>();
        run.ae_inference_us = rj.at("ae_inference_us").get<double>();
        run.train_windows = rj.at("train_windows").get<std::size_t>();
        run.test_windows = rj.at("test_windows").get<std::size_t>();
        for (const auto& sj : rj.at("scenarios")) run.scenarios.push_back(scenario_from_json(sj));
        bundle.runs.push_back(std::move(run));
    }
    return bundle;
}

Bundle load_bundle_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open bundle: " + path);
    nlohmann::json j;
    in >> j;
    return bundle_from_json(j);
}

std::vector<std::string> emit_report(const Bundle& bundle, const std::string& out_dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw DataError("cannot create output directory: " + out_dir);
    std::vector<std::string> written;

    auto open_file = [&](const std::string& name) {
        std::string path = (fs::path(out_dir) / name).string();
        std::ofstream out(path);
        if (!out) throw DataError("cannot write report file: " + path);
        written.push_back(path);
        return out;
    };

    auto accuracy = aggregate_accuracy(bundle);

    // summary.json: fully deterministic (no timestamps)
    {
        nlohmann::json features = nlohmann::json::array();
        for (const auto& acc : accuracy) {
            features.push_back({{"feature", feature_name(acc.feature)},
                                {"window_accuracy_mean", acc.window_accuracy_mean},
                                {"window_accuracy_std", acc.window_accuracy_std},
                                {"majority_accuracy", acc.majority_accuracy},
                                {"forced_fraction", acc.forced_fraction},
                                {"runs", acc.runs}});
        }
        std::vector<double> mae_std, mae_raw, ae_mse;
        for (const auto& run : bundle.runs) {
            mae_std.push_back(run.test_mae_std);
            mae_raw.push_back(run.test_mae_raw);
            ae_mse.push_back(run.ae_mse);
        }
        nlohmann::json j = {
            {"config_hash", bundle.hash},
            {"partial", bundle.partial},
            {"stage_error", bundle.stage_error},
            {"runs_completed", bundle.runs.size()},
            {"models",
             {{"cnn_test_mae_std_mean", mean_of(mae_std)},
              {"cnn_test_mae_std_stddev", std_of(mae_std)},
              {"cnn_test_mae_raw_mean", mean_of(mae_raw)},
              {"ae_reconstruction_mse_mean", mean_of(ae_mse)},
              {"ae_reconstruction_mse_stddev", std_of(ae_mse)}}},
            {"localization",
             {{"per_feature", features},
              {"overall_majority_accuracy", overall_majority_accuracy(bundle)}}},
            {"config", config_to_json(bundle.config)},
        };
        open_file("summary.json") << j.dump(2) << '\n';
    }

    // table2.csv: base model metrics
    {
        auto out = open_file("table2.csv");
        out << "model,metric,mean,stddev,inference_us_mean\n";
        std::vector<double> mae_raw, ae_mse, cnn_us, ae_us;
        for (const auto& run : bundle.runs) {
            mae_raw.push_back(run.test_mae_raw);
            ae_mse.push_back(run.ae_mse);
            cnn_us.push_back(run.cnn_inference_us);
            ae_us.push_back(run.ae_inference_us);
        }
        out << "cnn,test_mae_raw," << fmt(mean_of(mae_raw)) << ',' << fmt(std_of(mae_raw)) << ','
            << fmt(mean_of(cnn_us)) << '\n';
        out << "ae,reconstruction_mse," << fmt(mean_of(ae_mse)) << ',' << fmt(std_of(ae_mse))
            << ',' << fmt(mean_of(ae_us)) << '\n';
    }

    // table3.csv: per-feature localization accuracy
    {
        auto out = open_file("table3.csv");
        out << "feature,window_accuracy_mean,window_accuracy_std,majority_accuracy,"
               "forced_fraction,runs\n";
        for (const auto& acc : accuracy) {
            out << feature_name(acc.feature) << ',' << fmt(acc.window_accuracy_mean) << ','
                << fmt(acc.window_accuracy_std) << ',' << fmt(acc.majority_accuracy) << ','
                << fmt(acc.forced_fraction) << ',' << acc.runs << '\n';
        }
    }

    // fig2_<feature>.csv: per-run batch MAE series
    for (Feature f : bundle.config.scenarios) {
        auto out = open_file(std::string("fig2_") + feature_name(f) + ".csv");
        out << "run,batch_index,mae,post_onset\n";
        for (const auto& run : bundle.runs) {
            for (const auto& sc : run.scenarios) {
                if (sc.injected != f) continue;
                std::size_t onset_batch =
                    sc.onset_window / static_cast<std::size_t>(bundle.config.detector.batch);
                for (std::size_t b = 0; b < sc.batch_mae.size(); ++b) {
                    out << run.run << ',' << b << ',' << fmt(sc.batch_mae[b]) << ','
                        << (b >= onset_batch ? 1 : 0) << '\n';
                }
            }
        }
    }

    // fig3.csv: per-window distance profiles for the co2 scenario (or the
    // first configured scenario when co2 is absent)
    {
        Feature profiled = bundle.config.scenarios.front();
        for (Feature f : bundle.config.scenarios) {
            if (f == Feature::co2) profiled = f;
        }
        auto out = open_file("fig3.csv");
        out << "run,window_index,feature,distance\n";
        for (const auto& run : bundle.runs) {
            for (const auto& sc : run.scenarios) {
                if (sc.injected != profiled) continue;
                for (std::size_t i = 0; i < sc.window_scores.size(); ++i) {
                    for (Feature f : kAllFeatures) {
                        out << run.run << ',' << i << ',' << feature_name(f) << ','
                            << fmt(sc.window_scores[i][static_cast<int>(f)]) << '\n';
                    }
                }
            }
        }
    }

    // fig4.csv: per-channel reconstruction-loss differences, co2 scenario
    {
        Feature profiled = bundle.config.scenarios.front();
        for (Feature f : bundle.config.scenarios) {
            if (f == Feature::co2) profiled = f;
        }
        auto out = open_file("fig4.csv");
        out << "run,channel,normal_loss,drift_loss,pct_diff,undefined\n";
        for (const auto& run : bundle.runs) {
            for (const auto& sc : run.scenarios) {
                if (sc.injected != profiled) continue;
                for (const auto& ch : sc.channels) {
                    out << run.run << ',' << ch.channel << ',' << fmt(ch.normal_loss) << ','
                        << fmt(ch.drift_loss) << ',' << (ch.undefined ? "" : fmt(ch.pct_diff))
                        << ',' << (ch.undefined ? 1 : 0) << '\n';
                }
            }
        }
    }

    // manifest.json: provenance (the only file with a timestamp)
    {
        nlohmann::json seeds = nlohmann::json::array();
        for (const auto& run : bundle.runs) {
            seeds.push_back({{"run", run.run},
                             {"data_seed", run.data_seed},
                             {"train_seed", run.train_seed}});
        }
        std::time_t now = std::time(nullptr);
        char stamp[32];
        std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
        nlohmann::json j = {{"generated_at", stamp},
                            {"config_hash", bundle.hash},
                            {"seeds", seeds},
                            {"versions",
                             {{"fde", kVersion},
                              {"kernels", kernels::backend_name(kernels::active_backend())}}},
                            {"partial", bundle.partial}};
        open_file("manifest.json") << j.dump(2) << '\n';
    }

    open_file("bundle.json") << bundle_to_json(bundle).dump() << '\n';
    return written;
}

}  // namespace fde::experiment
