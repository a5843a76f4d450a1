#pragma once

#include <cstdint>
#include <vector>

#include "fde/data.hpp"
#include "fde/nn.hpp"

namespace fde::models {

// 1D-CNN regressor: width-1 conv over the history window (relu), flatten,
// dense head down to a single standardized co2 prediction.
struct RegressorConfig {
    int history = 5;
    int features = kNumFeatures;
    int channels = 32;
    int hidden = 64;

    int activation_size() const { return history * channels; }
};

struct Regressor {
    RegressorConfig cfg;
    nn::Network net;
};

// Activation autoencoder, symmetric with a single compression stage on each
// side of the latent bottleneck; relu hidden layers, linear output.
struct AutoencoderConfig {
    int input = 160;
    int hidden = 64;
    int latent = 16;
};

struct Autoencoder {
    AutoencoderConfig cfg;
    nn::Network net;
};

struct TrainSettings {
    double lr = 1e-3;
    int batch_size = 32;
    int max_epochs = 200;
    int patience = 20;
    double val_fraction = 0.1;  // last fraction of samples, temporal order
};

Regressor make_regressor(const RegressorConfig& cfg, std::uint64_t seed);
Autoencoder make_autoencoder(const AutoencoderConfig& cfg, std::uint64_t seed);

std::vector<double> flatten_window(const data::Window& w);

// Trains with mse on standardized windows; divergence raises TrainingError.
nn::TrainLog train_regressor(Regressor& model, const std::vector<data::Window>& train_windows,
                             const TrainSettings& settings, std::uint64_t seed);

double predict(const Regressor& model, const data::Window& window);

// Post-relu outputs of the first conv layer, flattened time-major to
// history x channels values (160 at the production shape).
std::vector<double> capture_activations(const Regressor& model, const data::Window& window);

std::vector<std::vector<double>> capture_all_activations(const Regressor& model,
                                                         const std::vector<data::Window>& windows);

nn::TrainLog train_autoencoder(Autoencoder& model,
                               const std::vector<std::vector<double>>& activations,
                               const TrainSettings& settings, std::uint64_t seed);

struct Reconstruction {
    std::vector<double> latent;
    std::vector<double> output;
    double mse = 0.0;
};

Reconstruction encode_reconstruct(const Autoencoder& model, const std::vector<double>& activation);

std::vector<double> encode(const Autoencoder& model, const std::vector<double>& activation);

// Mean absolute prediction error over windows, in standardized units.
double mean_absolute_error(const Regressor& model, const std::vector<data::Window>& windows);

// Rebuild typed models from persisted nn checkpoints, validating the
// architecture they claim.
Regressor regressor_from_network(nn::Network net);
Autoencoder autoencoder_from_network(nn::Network net);
Regressor load_regressor(const std::string& path);
Autoencoder load_autoencoder(const std::string& path);

// Mean reconstruction mse of the windows' activations.
double mean_reconstruction_mse(const Autoencoder& model,
                               const std::vector<std::vector<double>>& activations);

}  // namespace fde::models
