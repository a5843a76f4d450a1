#pragma once

// Shared end-to-end fixture: synthetic dataset through prep and training,
// built once per test process and reused by the model/explain/experiment
// suites. Training is deterministic (fixed seeds), so assertions on it are
// stable.

#include <vector>

#include "fde/data.hpp"
#include "fde/explain.hpp"
#include "fde/models.hpp"
#include "fde/synth.hpp"

namespace fde::testing {

struct Pipeline {
    synth::SyntheticSpec spec;
    data::TimeSeriesFrame frame;
    std::vector<data::Window> raw_windows;
    data::Split split;
    data::Scaler scaler;
    std::vector<data::Window> train_windows;  // standardized
    std::vector<data::Window> test_windows;   // standardized
    models::Regressor regressor;
    models::Autoencoder autoencoder;
    nn::TrainLog regressor_log;
    nn::TrainLog autoencoder_log;
    explain::LatentReference reference;
};

inline const Pipeline& trained_pipeline() {
    static const Pipeline p = [] {
        Pipeline pl;
        pl.spec.length = 1200;
        pl.spec.seed = 1337;
        pl.frame = synth::generate_synthetic(pl.spec);
        pl.raw_windows = data::make_windows(pl.frame);
        pl.split = data::split_challenging_test(pl.raw_windows);

        std::vector<data::Window> train_raw, test_raw;
        for (auto i : pl.split.train) train_raw.push_back(pl.raw_windows[i]);
        for (auto i : pl.split.test) test_raw.push_back(pl.raw_windows[i]);
        pl.scaler = data::Scaler::fit_from_windows(train_raw);
        pl.train_windows = data::standardize_windows(train_raw, pl.scaler);
        pl.test_windows = data::standardize_windows(test_raw, pl.scaler);

        models::TrainSettings settings;
        settings.max_epochs = 60;
        settings.patience = 10;
        pl.regressor = models::make_regressor({}, 7001);
        pl.regressor_log = models::train_regressor(pl.regressor, pl.train_windows, settings, 7002);

        auto acts = models::capture_all_activations(pl.regressor, pl.train_windows);
        pl.autoencoder = models::make_autoencoder({}, 7003);
        models::TrainSettings ae_settings = settings;
        ae_settings.max_epochs = 120;
        ae_settings.patience = 15;
        pl.autoencoder_log = models::train_autoencoder(pl.autoencoder, acts, ae_settings, 7004);

        pl.reference =
            explain::build_latent_reference(pl.regressor, pl.autoencoder, pl.train_windows, 2000, 7005);
        return pl;
    }();
    return p;
}

}  // namespace fde::testing
