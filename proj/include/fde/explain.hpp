#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fde/drift.hpp"
#include "fde/models.hpp"

#include "json.hpp"

namespace fde::explain {

// Latent encodings of the training windows' first-layer activations, plus the
// per-feature representative point used for counterfactual replacement (the
// training mean, i.e. zero in standardized space).
struct LatentReference {
    std::vector<std::vector<double>> latents;
    std::array<double, kNumFeatures> representative{};
    int latent_dim = 0;
};

LatentReference build_latent_reference(const models::Regressor& regressor,
                                       const models::Autoencoder& autoencoder,
                                       const std::vector<data::Window>& train_windows,
                                       std::size_t cap = 5000, std::uint64_t seed = 0);

// Copy of `window` with every lagged value of feature q set to the
// representative value; all other columns untouched.
data::Window counterfactual_replace(const data::Window& window, Feature q,
                                    const std::array<double, kNumFeatures>& representative);

// Order-r Minkowski distance between two latent vectors.
double minkowski_distance(const std::vector<double>& a, const std::vector<double>& b, double order);

// Mean order-r distance from `latent` to every member of the reference set.
double minkowski_mean_distance(const std::vector<double>& latent, const LatentReference& reference,
                               double order);

struct FeatureScore {
    Feature feature = Feature::co2;
    double mean_distance = 0.0;
    std::size_t wins = 0;  // windows where this feature had the smallest distance
    int rank = 0;          // 0 = predicted drifting feature
};

struct ChannelDiagnostic {
    int channel = 0;
    double normal_loss = 0.0;
    double drift_loss = 0.0;
    double pct_diff = 0.0;
    bool undefined = false;  // normal loss was zero; pct_diff is a sentinel
};

struct DriftReport {
    std::optional<drift::DriftScenario> scenario;
    bool forced = false;
    std::vector<drift::Alarm> alarms;
    std::vector<std::array<double, kNumFeatures>> per_window_scores;
    std::vector<Feature> per_window_argmin;
    std::array<FeatureScore, kNumFeatures> features{};
    Feature predicted = Feature::co2;
    std::vector<ChannelDiagnostic> channels;
    // Populated when the scenario (ground truth) is known.
    double window_accuracy = 0.0;
    bool majority_correct = false;
};

// Counterfactual localization over the drifting section: for every window and
// every candidate feature, replace, re-encode, score against the reference;
// the feature winning the most windows is the prediction (ties broken by the
// smaller mean distance).
DriftReport localize_drift(const std::vector<data::Window>& drifting_windows,
                           const LatentReference& reference, const models::Regressor& regressor,
                           const models::Autoencoder& autoencoder, double order = 2.0);

// Per-channel percentage difference of reconstruction loss, drifting vs
// normal activations, aggregated from per-position squared errors.
std::vector<ChannelDiagnostic> channel_reconstruction_diff(
    const models::Autoencoder& autoencoder, const std::vector<std::vector<double>>& normal_acts,
    const std::vector<std::vector<double>>& drifting_acts, int channels = 32, int timesteps = 5);

nlohmann::json report_to_json(const DriftReport& report);
void write_report_json(const DriftReport& report, const std::string& path);

// Flat (window_index, feature, distance) rows for distance-profile plots.
void write_distances_csv(const DriftReport& report, const std::string& path);

}  // namespace fde::explain
