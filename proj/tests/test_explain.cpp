#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "fde/explain.hpp"
#include "pipeline_fixture.hpp"

using namespace fde;
using namespace fde::explain;

TEST_SUITE_BEGIN("explain");

TEST_CASE("minkowski distance identities") {
    LatentReference singleton;
    singleton.latent_dim = 2;
    singleton.latents = {{0.0, 0.0}};

    CHECK(minkowski_mean_distance({0.0, 0.0}, singleton, 2.0) == 0.0);
    // 3-4-5 triangle
    CHECK(minkowski_mean_distance({3.0, 4.0}, singleton, 2.0) == doctest::Approx(5.0));
    // r = 2 on a singleton reference is exactly the Euclidean norm
    CHECK(minkowski_distance({3.0, 4.0}, {0.0, 0.0}, 2.0) ==
          minkowski_mean_distance({3.0, 4.0}, singleton, 2.0));

    LatentReference pair;
    pair.latent_dim = 2;
    pair.latents = {{0.0, 0.0}, {2.0, 0.0}};
    CHECK(minkowski_mean_distance({1.0, 0.0}, pair, 1.0) == doctest::Approx(1.0));

    CHECK(minkowski_distance({1, 1, 1}, {0, 0, 0}, 3.0) == doctest::Approx(std::pow(3.0, 1.0 / 3)));

    LatentReference empty;
    CHECK_THROWS_AS(minkowski_mean_distance({1.0}, empty, 2.0), DomainError);
    CHECK_THROWS_AS(minkowski_distance({1.0}, {1.0}, 0.5), DomainError);
    CHECK_THROWS_AS(minkowski_distance({1.0}, {1.0, 2.0}, 2.0), ShapeError);
}

TEST_CASE("counterfactual replacement fixed points and commutation") {
    std::array<double, kNumFeatures> rep{};
    data::Window w;
    w.input = Matrix(5, kNumFeatures);
    Rng rng(41);
    for (std::size_t r = 0; r < 5; ++r) {
        for (int f = 0; f < kNumFeatures; ++f) w.input(r, f) = rng.normal();
    }

    // already at the representative: replacement is the identity
    data::Window fixed = w;
    for (std::size_t r = 0; r < 5; ++r) fixed.input(r, 2) = rep[2];
    CHECK(counterfactual_replace(fixed, Feature::humidity, rep).input == fixed.input);

    // drifted column goes to the representative, everything else untouched
    data::Window drifted = w;
    for (std::size_t r = 0; r < 5; ++r) drifted.input(r, 1) = 2.0;
    auto replaced = counterfactual_replace(drifted, Feature::temperature, rep);
    for (std::size_t r = 0; r < 5; ++r) {
        CHECK(replaced.input(r, 1) == 0.0);
        for (int f = 0; f < kNumFeatures; ++f) {
            if (f != 1) CHECK(replaced.input(r, f) == drifted.input(r, f));
        }
    }

    // replacement on disjoint columns commutes
    auto ab = counterfactual_replace(counterfactual_replace(w, Feature::co2, rep),
                                     Feature::pir, rep);
    auto ba = counterfactual_replace(counterfactual_replace(w, Feature::pir, rep),
                                     Feature::co2, rep);
    CHECK(ab.input == ba.input);
}

TEST_CASE("latent reference construction") {
    const auto& pl = fde::testing::trained_pipeline();
    CHECK(pl.reference.latent_dim == 16);
    CHECK(pl.reference.latents.size() == std::min<std::size_t>(2000, pl.train_windows.size()));
    for (double v : pl.reference.representative) CHECK(v == 0.0);

    // duplicate windows produce identical latents
    std::vector<data::Window> dup = {pl.train_windows[0], pl.train_windows[0]};
    auto ref = build_latent_reference(pl.regressor, pl.autoencoder, dup, 0, 1);
    REQUIRE(ref.latents.size() == 2);
    CHECK(ref.latents[0] == ref.latents[1]);

    // subsampling caps the size deterministically
    auto capped = build_latent_reference(pl.regressor, pl.autoencoder, pl.train_windows, 100, 5);
    auto capped2 = build_latent_reference(pl.regressor, pl.autoencoder, pl.train_windows, 100, 5);
    CHECK(capped.latents.size() == 100);
    CHECK(capped.latents == capped2.latents);

    CHECK_THROWS_AS(build_latent_reference(pl.regressor, pl.autoencoder, {}, 0, 1), DomainError);
}

TEST_CASE("localization finds the injected feature on the synthetic oracle") {
    const auto& pl = fde::testing::trained_pipeline();
    std::size_t onset = pl.test_windows.size() / 2;
    drift::DriftScenario sc{Feature::temperature, onset, 2.0, 0};
    auto corrupted = drift::inject_outlier_drift(pl.test_windows, sc, pl.scaler, true);
    std::vector<data::Window> drifting(corrupted.begin() + onset, corrupted.end());

    auto report = localize_drift(drifting, pl.reference, pl.regressor, pl.autoencoder, 2.0);
    CHECK(report.predicted == Feature::temperature);
    CHECK(report.per_window_scores.size() == drifting.size());
    CHECK(report.features[static_cast<int>(Feature::temperature)].rank == 0);

    // ranks are a permutation of 0..4 and wins sum to the window count
    std::array<bool, kNumFeatures> seen{};
    std::size_t wins = 0;
    for (const auto& fs : report.features) {
        seen[fs.rank] = true;
        wins += fs.wins;
    }
    for (bool s : seen) CHECK(s);
    CHECK(wins == drifting.size());

    CHECK_THROWS_AS(localize_drift({}, pl.reference, pl.regressor, pl.autoencoder, 2.0),
                    DomainError);
}

TEST_CASE("localization is invariant to window and reference order") {
    const auto& pl = fde::testing::trained_pipeline();
    std::size_t onset = pl.test_windows.size() - 40;
    drift::DriftScenario sc{Feature::pressure, onset, 2.0, 0};
    auto corrupted = drift::inject_outlier_drift(pl.test_windows, sc, pl.scaler, true);
    std::vector<data::Window> drifting(corrupted.begin() + onset, corrupted.end());

    auto report = localize_drift(drifting, pl.reference, pl.regressor, pl.autoencoder, 2.0);

    std::vector<data::Window> reversed(drifting.rbegin(), drifting.rend());
    LatentReference shuffled = pl.reference;
    std::reverse(shuffled.latents.begin(), shuffled.latents.end());
    auto report2 = localize_drift(reversed, shuffled, pl.regressor, pl.autoencoder, 2.0);

    CHECK(report.predicted == report2.predicted);
    for (int q = 0; q < kNumFeatures; ++q) {
        CHECK(report.features[q].mean_distance ==
              doctest::Approx(report2.features[q].mean_distance).epsilon(1e-12));
        CHECK(report.features[q].wins == report2.features[q].wins);
    }
}

TEST_CASE("counterfactual no-op: training windows give no decisive winner") {
    const auto& pl = fde::testing::trained_pipeline();
    // feed genuine training windows as the "drifting" section; no feature
    // should dominate the argmin vote across seeded draws
    Rng rng(43);
    std::size_t max_wins = 0, total = 0;
    std::array<std::size_t, kNumFeatures> wins{};
    for (int draw = 0; draw < 10; ++draw) {
        std::vector<data::Window> sample;
        for (int k = 0; k < 20; ++k) {
            sample.push_back(pl.train_windows[rng.uniform_index(pl.train_windows.size())]);
        }
        auto report = localize_drift(sample, pl.reference, pl.regressor, pl.autoencoder, 2.0);
        for (int q = 0; q < kNumFeatures; ++q) wins[q] += report.features[q].wins;
        total += sample.size();
    }
    for (int q = 0; q < kNumFeatures; ++q) max_wins = std::max(max_wins, wins[q]);
    CHECK(max_wins * 2 <= total + 20);  // no feature wins a clear majority
}

TEST_CASE("channel reconstruction differences") {
    const auto& pl = fde::testing::trained_pipeline();
    auto normal_acts = models::capture_all_activations(
        pl.regressor, {pl.test_windows.begin(), pl.test_windows.begin() + 50});

    // identical sets: all pct_diff exactly zero
    auto same = channel_reconstruction_diff(pl.autoencoder, normal_acts, normal_acts);
    REQUIRE(same.size() == 32);
    for (const auto& d : same) {
        CHECK(d.pct_diff == 0.0);
        CHECK(!d.undefined);
    }

    // doubling the loss in a synthetic setup: +100%
    // (construct by scaling activations so reconstruction error doubles is
    // fragile; instead verify the formula on hand-built diagnostics)
    drift::DriftScenario sc{Feature::co2, 0, 2.0, 0};
    auto corrupted = drift::inject_outlier_drift(pl.test_windows, sc, pl.scaler, true);
    auto drift_acts = models::capture_all_activations(
        pl.regressor, {corrupted.begin(), corrupted.begin() + 50});
    auto diags = channel_reconstruction_diff(pl.autoencoder, normal_acts, drift_acts);

    // aggregation is a partition: channel means average to the global mean
    double channel_mean = 0.0, norm_mean = 0.0;
    for (const auto& d : diags) {
        channel_mean += d.drift_loss;
        norm_mean += d.normal_loss;
    }
    channel_mean /= diags.size();
    norm_mean /= diags.size();
    double direct_drift = 0.0, direct_norm = 0.0;
    for (const auto& a : drift_acts) direct_drift += models::encode_reconstruct(pl.autoencoder, a).mse;
    for (const auto& a : normal_acts) direct_norm += models::encode_reconstruct(pl.autoencoder, a).mse;
    direct_drift /= drift_acts.size();
    direct_norm /= normal_acts.size();
    CHECK(channel_mean == doctest::Approx(direct_drift).epsilon(1e-10));
    CHECK(norm_mean == doctest::Approx(direct_norm).epsilon(1e-10));

    // majority of channels positive under a dominant-feature drift
    std::size_t positive = 0;
    for (const auto& d : diags) positive += (!d.undefined && d.pct_diff > 0.0) ? 1 : 0;
    CHECK(positive * 100 > 60 * diags.size());

    CHECK_THROWS_AS(channel_reconstruction_diff(pl.autoencoder, {}, drift_acts), DomainError);
}

TEST_CASE("pct_diff doubles when the drifting loss doubles") {
    // zero network reconstructs everything to zero, so the per-position loss
    // is exactly the squared activation: values 1 vs sqrt(2) give +100%
    models::AutoencoderConfig cfg;
    cfg.input = 8;
    cfg.hidden = 4;
    cfg.latent = 2;
    models::Autoencoder ae = models::make_autoencoder(cfg, 51);
    for (auto& l : ae.net.layers) {
        for (auto& w : l.weights.values()) w = 0.0;
        for (auto& b : l.bias) b = 0.0;
    }
    std::vector<std::vector<double>> normal = {std::vector<double>(8, 1.0)};
    std::vector<std::vector<double>> drifting = {std::vector<double>(8, std::sqrt(2.0))};
    auto diags = channel_reconstruction_diff(ae, normal, drifting, 4, 2);
    REQUIRE(diags.size() == 4);
    for (const auto& d : diags) {
        CHECK(d.normal_loss == doctest::Approx(1.0));
        CHECK(d.drift_loss == doctest::Approx(2.0));
        CHECK(d.pct_diff == doctest::Approx(100.0));
        CHECK(!d.undefined);
    }
}

TEST_CASE("pct_diff arithmetic and zero-loss sentinel") {
    // formula check on a micro autoencoder with known behavior: identity
    // weights reconstruct perfectly (loss 0 -> undefined sentinel)
    models::AutoencoderConfig cfg;
    cfg.input = 4;
    cfg.hidden = 4;
    cfg.latent = 4;
    models::Autoencoder ae = models::make_autoencoder(cfg, 50);
    for (auto& l : ae.net.layers) {
        for (auto& w : l.weights.values()) w = 0.0;
        for (std::size_t i = 0; i < l.weights.rows() && i < l.weights.cols(); ++i) l.weights(i, i) = 1.0;
        for (auto& b : l.bias) b = 0.0;
    }
    std::vector<std::vector<double>> acts = {{1, 2, 3, 4}};
    auto diags = channel_reconstruction_diff(ae, acts, acts, 2, 2);
    REQUIRE(diags.size() == 2);
    for (const auto& d : diags) {
        CHECK(d.undefined);  // zero normal loss
        CHECK(d.pct_diff == 0.0);
    }
}

TEST_CASE("report json and distances csv") {
    const auto& pl = fde::testing::trained_pipeline();
    std::size_t onset = pl.test_windows.size() - 25;
    drift::DriftScenario sc{Feature::co2, onset, 2.0, 0};
    auto corrupted = drift::inject_outlier_drift(pl.test_windows, sc, pl.scaler, true);
    std::vector<data::Window> drifting(corrupted.begin() + onset, corrupted.end());
    auto report = localize_drift(drifting, pl.reference, pl.regressor, pl.autoencoder, 2.0);
    report.scenario = sc;
    report.window_accuracy = 0.5;

    auto j = report_to_json(report);
    CHECK(j.at("predicted_feature").is_string());
    CHECK(j.at("features").size() == 5);
    CHECK(j.at("scenario").at("feature") == "co2");

    auto dir = std::filesystem::temp_directory_path();
    auto path = (dir / "fde_distances.csv").string();
    write_distances_csv(report, path);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "window_index,feature,distance");
    std::size_t rows = 0;
    std::string line;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == drifting.size() * kNumFeatures);
    std::filesystem::remove(path);
}

TEST_SUITE_END();
