#include "fde/models.hpp"

#include <algorithm>
#include <cmath>

namespace fde::models {

namespace {

void split_validation(const std::vector<std::vector<double>>& x,
                      const std::vector<std::vector<double>>& y, double val_fraction,
                      std::vector<std::vector<double>>& xt, std::vector<std::vector<double>>& yt,
                      std::vector<std::vector<double>>& xv, std::vector<std::vector<double>>& yv) {
    std::size_t n = x.size();
    std::size_t n_val = static_cast<std::size_t>(std::floor(n * val_fraction));
    if (n - n_val < 1) n_val = 0;
    std::size_t n_train = n - n_val;
    xt.assign(x.begin(), x.begin() + n_train);
    yt.assign(y.begin(), y.begin() + n_train);
    xv.assign(x.begin() + n_train, x.end());
    yv.assign(y.begin() + n_train, y.end());
}

nn::TrainOptions to_options(const TrainSettings& s, std::uint64_t seed) {
    nn::TrainOptions opts;
    opts.adam.lr = s.lr;
    opts.batch_size = s.batch_size;
    opts.max_epochs = s.max_epochs;
    opts.patience = s.patience;
    opts.loss = nn::LossKind::mse;
    opts.seed = seed;
    return opts;
}

}  // namespace

Regressor make_regressor(const RegressorConfig& cfg, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<nn::LayerSpec> specs = {
        {nn::LayerKind::pointwise_conv, cfg.features, cfg.channels, cfg.history, nn::Act::relu},
        {nn::LayerKind::dense, cfg.activation_size(), cfg.hidden, 1, nn::Act::relu},
        {nn::LayerKind::dense, cfg.hidden, 1, 1, nn::Act::identity},
    };
    return {cfg, nn::make_network(specs, rng)};
}

Autoencoder make_autoencoder(const AutoencoderConfig& cfg, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<nn::LayerSpec> specs = {
        {nn::LayerKind::dense, cfg.input, cfg.hidden, 1, nn::Act::relu},
        {nn::LayerKind::dense, cfg.hidden, cfg.latent, 1, nn::Act::relu},
        {nn::LayerKind::dense, cfg.latent, cfg.hidden, 1, nn::Act::relu},
        {nn::LayerKind::dense, cfg.hidden, cfg.input, 1, nn::Act::identity},
    };
    return {cfg, nn::make_network(specs, rng)};
}

std::vector<double> flatten_window(const data::Window& w) {
    return w.input.values();
}

nn::TrainLog train_regressor(Regressor& model, const std::vector<data::Window>& train_windows,
                             const TrainSettings& settings, std::uint64_t seed) {
    if (train_windows.empty()) throw TrainingError("train_regressor: no training windows");
    std::vector<std::vector<double>> x, y;
    x.reserve(train_windows.size());
    y.reserve(train_windows.size());
    for (const auto& w : train_windows) {
        if (static_cast<int>(w.input.rows()) != model.cfg.history ||
            static_cast<int>(w.input.cols()) != model.cfg.features) {
            throw ShapeError("train_regressor: window shape mismatch");
        }
        x.push_back(flatten_window(w));
        y.push_back({w.target});
    }
    std::vector<std::vector<double>> xt, yt, xv, yv;
    split_validation(x, y, settings.val_fraction, xt, yt, xv, yv);
    return nn::train(model.net, xt, yt, xv, yv, to_options(settings, seed));
}

double predict(const Regressor& model, const data::Window& window) {
    if (static_cast<int>(window.input.rows()) != model.cfg.history ||
        static_cast<int>(window.input.cols()) != model.cfg.features) {
        throw ShapeError("predict: window shape mismatch");
    }
    return nn::forward(model.net, flatten_window(window))[0];
}

std::vector<double> capture_activations(const Regressor& model, const data::Window& window) {
    if (static_cast<int>(window.input.rows()) != model.cfg.history ||
        static_cast<int>(window.input.cols()) != model.cfg.features) {
        throw ShapeError("capture_activations: window shape mismatch");
    }
    std::vector<double> pre, post;
    nn::layer_forward(model.net.layers[0], flatten_window(window), pre, post);
    return post;
}

std::vector<std::vector<double>> capture_all_activations(const Regressor& model,
                                                         const std::vector<data::Window>& windows) {
    std::vector<std::vector<double>> acts;
    acts.reserve(windows.size());
    for (const auto& w : windows) acts.push_back(capture_activations(model, w));
    return acts;
}

nn::TrainLog train_autoencoder(Autoencoder& model,
                               const std::vector<std::vector<double>>& activations,
                               const TrainSettings& settings, std::uint64_t seed) {
    if (activations.empty()) throw TrainingError("train_autoencoder: no activations");
    for (const auto& a : activations) {
        if (static_cast<int>(a.size()) != model.cfg.input) {
            throw ShapeError("train_autoencoder: activation length mismatch");
        }
    }
    std::vector<std::vector<double>> xt, yt, xv, yv;
    split_validation(activations, activations, settings.val_fraction, xt, yt, xv, yv);
    return nn::train(model.net, xt, yt, xv, yv, to_options(settings, seed));
}

Reconstruction encode_reconstruct(const Autoencoder& model, const std::vector<double>& activation) {
    if (static_cast<int>(activation.size()) != model.cfg.input) {
        throw ShapeError("encode_reconstruct: activation length mismatch");
    }
    nn::ForwardCache cache;
    Reconstruction rec;
    rec.output = nn::forward(model.net, activation, &cache);
    rec.latent = cache.post[1];  // bottleneck layer output
    rec.mse = nn::loss(rec.output, activation, nn::LossKind::mse);
    return rec;
}

std::vector<double> encode(const Autoencoder& model, const std::vector<double>& activation) {
    if (static_cast<int>(activation.size()) != model.cfg.input) {
        throw ShapeError("encode: activation length mismatch");
    }
    std::vector<double> pre, post0, post1;
    nn::layer_forward(model.net.layers[0], activation, pre, post0);
    nn::layer_forward(model.net.layers[1], post0, pre, post1);
    return post1;
}

double mean_absolute_error(const Regressor& model, const std::vector<data::Window>& windows) {
    if (windows.empty()) throw DomainError("mean_absolute_error: no windows");
    double acc = 0.0;
    for (const auto& w : windows) acc += std::fabs(predict(model, w) - w.target);
    return acc / static_cast<double>(windows.size());
}

double mean_reconstruction_mse(const Autoencoder& model,
                               const std::vector<std::vector<double>>& activations) {
    if (activations.empty()) throw DomainError("mean_reconstruction_mse: no activations");
    double acc = 0.0;
    for (const auto& a : activations) acc += encode_reconstruct(model, a).mse;
    return acc / static_cast<double>(activations.size());
}

Regressor regressor_from_network(nn::Network net) {
    if (net.layers.size() != 3 || net.layers[0].spec.kind != nn::LayerKind::pointwise_conv ||
        net.output_size() != 1) {
        throw DataError("checkpoint is not a regressor network");
    }
    RegressorConfig cfg;
    cfg.history = net.layers[0].spec.timesteps;
    cfg.features = net.layers[0].spec.in;
    cfg.channels = net.layers[0].spec.out;
    cfg.hidden = net.layers[1].spec.out;
    return {cfg, std::move(net)};
}

Autoencoder autoencoder_from_network(nn::Network net) {
    if (net.layers.size() != 4 || net.input_size() != net.output_size()) {
        throw DataError("checkpoint is not an autoencoder network");
    }
    AutoencoderConfig cfg;
    cfg.input = net.input_size();
    cfg.hidden = net.layers[0].spec.out;
    cfg.latent = net.layers[1].spec.out;
    return {cfg, std::move(net)};
}

Regressor load_regressor(const std::string& path) {
    return regressor_from_network(nn::load_network(path));
}

Autoencoder load_autoencoder(const std::string& path) {
    return autoencoder_from_network(nn::load_network(path));
}

}  // namespace fde::models
