#include "fde/explain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "fde/kernels.hpp"

namespace fde::explain {

LatentReference build_latent_reference(const models::Regressor& regressor,
                                       const models::Autoencoder& autoencoder,
                                       const std::vector<data::Window>& train_windows,
                                       std::size_t cap, std::uint64_t seed) {
    if (train_windows.empty()) {
        throw DomainError("latent reference requires at least one training window");
    }
    std::vector<std::size_t> picked(train_windows.size());
    std::iota(picked.begin(), picked.end(), std::size_t{0});
    if (cap > 0 && train_windows.size() > cap) {
        Rng rng(derive_seed(seed, 0x4c4e));
        rng.shuffle(picked);
        picked.resize(cap);
        std::sort(picked.begin(), picked.end());
    }
    LatentReference ref;
    ref.latent_dim = autoencoder.cfg.latent;
    ref.representative.fill(0.0);  // standardized training mean
    ref.latents.reserve(picked.size());
    for (std::size_t i : picked) {
        ref.latents.push_back(
            models::encode(autoencoder, models::capture_activations(regressor, train_windows[i])));
    }
    return ref;
}

data::Window counterfactual_replace(const data::Window& window, Feature q,
                                    const std::array<double, kNumFeatures>& representative) {
    data::Window out = window;
    const int col = static_cast<int>(q);
    for (std::size_t r = 0; r < out.input.rows(); ++r) {
        out.input(r, col) = representative[col];
    }
    return out;
}

double minkowski_distance(const std::vector<double>& a, const std::vector<double>& b,
                          double order) {
    if (a.size() != b.size()) throw ShapeError("minkowski: dimension mismatch");
    if (order < 1.0) throw DomainError("minkowski order must be >= 1");
    if (order == 2.0) return std::sqrt(kernels::sum_sq_diff(a.data(), b.data(), a.size()));
    if (order == 1.0) return kernels::sum_abs_diff(a.data(), b.data(), a.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::pow(std::fabs(a[i] - b[i]), order);
    return std::pow(acc, 1.0 / order);
}

double minkowski_mean_distance(const std::vector<double>& latent, const LatentReference& reference,
                               double order) {
    if (reference.latents.empty()) throw DomainError("empty latent reference");
    double acc = 0.0;
    for (const auto& l : reference.latents) acc += minkowski_distance(latent, l, order);
    return acc / static_cast<double>(reference.latents.size());
}

DriftReport localize_drift(const std::vector<data::Window>& drifting_windows,
                           const LatentReference& reference, const models::Regressor& regressor,
                           const models::Autoencoder& autoencoder, double order) {
    if (drifting_windows.empty()) throw DomainError("localize_drift: empty drifting section");
    DriftReport report;
    report.per_window_scores.reserve(drifting_windows.size());
    report.per_window_argmin.reserve(drifting_windows.size());

    std::array<double, kNumFeatures> mean_distance{};
    std::array<std::size_t, kNumFeatures> wins{};

    for (const auto& window : drifting_windows) {
        std::array<double, kNumFeatures> scores{};
        for (Feature q : kAllFeatures) {
            data::Window replaced = counterfactual_replace(window, q, reference.representative);
            auto latent =
                models::encode(autoencoder, models::capture_activations(regressor, replaced));
            scores[static_cast<int>(q)] = minkowski_mean_distance(latent, reference, order);
        }
        int best = 0;
        for (int q = 1; q < kNumFeatures; ++q) {
            if (scores[q] < scores[best]) best = q;
        }
        wins[best] += 1;
        for (int q = 0; q < kNumFeatures; ++q) mean_distance[q] += scores[q];
        report.per_window_scores.push_back(scores);
        report.per_window_argmin.push_back(static_cast<Feature>(best));
    }
    for (int q = 0; q < kNumFeatures; ++q) {
        mean_distance[q] /= static_cast<double>(drifting_windows.size());
    }

    // Majority vote across windows; ties fall back to the smaller mean score.
    std::array<int, kNumFeatures> order_idx = {0, 1, 2, 3, 4};
    std::sort(order_idx.begin(), order_idx.end(), [&](int a, int b) {
        if (wins[a] != wins[b]) return wins[a] > wins[b];
        if (mean_distance[a] != mean_distance[b]) return mean_distance[a] < mean_distance[b];
        return a < b;
    });
    for (int rank = 0; rank < kNumFeatures; ++rank) {
        int q = order_idx[rank];
        report.features[q] = {static_cast<Feature>(q), mean_distance[q], wins[q], rank};
    }
    report.predicted = static_cast<Feature>(order_idx[0]);
    return report;
}

std::vector<ChannelDiagnostic> channel_reconstruction_diff(
    const models::Autoencoder& autoencoder, const std::vector<std::vector<double>>& normal_acts,
    const std::vector<std::vector<double>>& drifting_acts, int channels, int timesteps) {
    if (normal_acts.empty() || drifting_acts.empty()) {
        throw DomainError("channel_reconstruction_diff: empty activation set");
    }
    const std::size_t positions = static_cast<std::size_t>(channels) * timesteps;
    auto position_means = [&](const std::vector<std::vector<double>>& acts) {
        std::vector<double> acc(positions, 0.0);
        for (const auto& a : acts) {
            if (a.size() != positions) {
                throw ShapeError("channel_reconstruction_diff: activation length");
            }
            auto rec = models::encode_reconstruct(autoencoder, a);
            for (std::size_t i = 0; i < positions; ++i) {
                double d = rec.output[i] - a[i];
                acc[i] += d * d;
            }
        }
        for (auto& v : acc) v /= static_cast<double>(acts.size());
        return acc;
    };
    std::vector<double> normal_pos = position_means(normal_acts);
    std::vector<double> drift_pos = position_means(drifting_acts);

    // position index = t * channels + c (time-major flattening)
    std::vector<ChannelDiagnostic> diags(channels);
    for (int c = 0; c < channels; ++c) {
        double n_acc = 0.0, d_acc = 0.0;
        for (int t = 0; t < timesteps; ++t) {
            n_acc += normal_pos[static_cast<std::size_t>(t) * channels + c];
            d_acc += drift_pos[static_cast<std::size_t>(t) * channels + c];
        }
        ChannelDiagnostic& diag = diags[c];
        diag.channel = c;
        diag.normal_loss = n_acc / timesteps;
        diag.drift_loss = d_acc / timesteps;
        if (diag.normal_loss > 0.0) {
            diag.pct_diff = 100.0 * (diag.drift_loss - diag.normal_loss) / diag.normal_loss;
        } else {
            diag.pct_diff = 0.0;
            diag.undefined = true;
        }
    }
    return diags;
}

nlohmann::json report_to_json(const DriftReport& report) {
    nlohmann::json features = nlohmann::json::array();
    for (const auto& fs : report.features) {
        features.push_back({{"feature", feature_name(fs.feature)},
                            {"mean_distance", fs.mean_distance},
                            {"wins", fs.wins},
                            {"rank", fs.rank}});
    }
    nlohmann::json channels = nlohmann::json::array();
    for (const auto& ch : report.channels) {
        channels.push_back({{"channel", ch.channel},
                            {"normal_loss", ch.normal_loss},
                            {"drift_loss", ch.drift_loss},
                            {"pct_diff", ch.undefined ? nlohmann::json() : nlohmann::json(ch.pct_diff)},
                            {"undefined", ch.undefined}});
    }
    nlohmann::json alarms = nlohmann::json::array();
    for (const auto& a : report.alarms) {
        alarms.push_back({{"batch_index", a.batch_index},
                          {"window_index", a.window_index},
                          {"mean_before", a.mean_before},
                          {"mean_after", a.mean_after}});
    }
    nlohmann::json argmin = nlohmann::json::array();
    for (Feature f : report.per_window_argmin) argmin.push_back(feature_name(f));

    nlohmann::json j = {{"predicted_feature", feature_name(report.predicted)},
                        {"forced", report.forced},
                        {"features", features},
                        {"channels", channels},
                        {"alarms", alarms},
                        {"per_window_argmin", argmin},
                        {"windows_scored", report.per_window_scores.size()}};
    if (report.scenario) {
        j["scenario"] = {{"feature", feature_name(report.scenario->feature)},
                         {"onset", report.scenario->onset},
                         {"magnitude", report.scenario->magnitude},
                         {"seed", report.scenario->seed}};
        j["window_accuracy"] = report.window_accuracy;
        j["majority_correct"] = report.majority_correct;
    }
    return j;
}

void write_report_json(const DriftReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write report: " + path);
    out << report_to_json(report).dump(2) << '\n';
}

void write_distances_csv(const DriftReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write distances: " + path);
    out << "window_index,feature,distance\n";
    char buf[96];
    for (std::size_t i = 0; i < report.per_window_scores.size(); ++i) {
        for (Feature f : kAllFeatures) {
            std::snprintf(buf, sizeof(buf), "%zu,%s,%.17g\n", i, feature_name(f),
                          report.per_window_scores[i][static_cast<int>(f)]);
            out << buf;
        }
    }
}

}  // namespace fde::explain
