#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fde/common.hpp"
#include "fde/matrix.hpp"

#include "json.hpp"

namespace fde::nn {

enum class Act { identity, relu };
enum class LayerKind { dense, pointwise_conv };
enum class LossKind { mse, mae };

const char* act_name(Act a);
const char* layer_kind_name(LayerKind k);

// A pointwise conv is a width-1 convolution over `timesteps` rows of `in`
// features: the same in-by-out linear map applied to every row. A dense layer
// is the timesteps == 1 case with its own weights.
struct LayerSpec {
    LayerKind kind = LayerKind::dense;
    int in = 0;
    int out = 0;
    int timesteps = 1;
    Act act = Act::identity;

    int input_size() const { return kind == LayerKind::dense ? in : in * timesteps; }
    int output_size() const { return kind == LayerKind::dense ? out : out * timesteps; }
};

struct Layer {
    LayerSpec spec;
    Matrix weights;  // in x out
    std::vector<double> bias;  // out
};

struct Network {
    std::vector<Layer> layers;

    int input_size() const { return layers.empty() ? 0 : layers.front().spec.input_size(); }
    int output_size() const { return layers.empty() ? 0 : layers.back().spec.output_size(); }
    std::size_t param_count() const;
};

// He-style uniform fan-in init for weights, zero bias.
Network make_network(const std::vector<LayerSpec>& specs, Rng& rng);

struct ForwardCache {
    std::vector<std::vector<double>> pre;   // per layer, before activation
    std::vector<std::vector<double>> post;  // per layer, after activation
};

// Single-layer forward; out gets the post-activation values. Used directly by
// the activation-capture path so it never pays for the rest of the network.
void layer_forward(const Layer& layer, std::span<const double> in, std::vector<double>& pre,
                   std::vector<double>& post);

std::vector<double> forward(const Network& net, std::span<const double> input,
                            ForwardCache* cache = nullptr);

double loss(std::span<const double> pred, std::span<const double> target, LossKind kind);

struct Gradients {
    std::vector<Matrix> dw;
    std::vector<std::vector<double>> db;

    static Gradients zeros_like(const Network& net);
};

// dLoss/dParam for the mean per-sample loss over a batch. Deterministic given
// the inputs; throws NumericError (naming the layer) on non-finite
// intermediates.
Gradients compute_gradients(const Network& net, const std::vector<std::vector<double>>& inputs,
                            const std::vector<std::vector<double>>& targets, LossKind kind,
                            double* out_loss = nullptr);

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    std::vector<Matrix> mw, vw;
    std::vector<std::vector<double>> mb, vb;
    long step = 0;

    static AdamState zeros_like(const Network& net);
};

void adam_step(Network& net, AdamState& state, const Gradients& grads, const AdamConfig& cfg);

struct TrainOptions {
    AdamConfig adam;
    int batch_size = 32;
    int max_epochs = 200;
    int patience = 20;
    LossKind loss = LossKind::mse;
    std::uint64_t seed = 0;
};

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;  // NaN when no validation set
};

struct TrainLog {
    std::vector<EpochStats> epochs;
    int best_epoch = -1;
    double best_loss = 0.0;
};

// Minibatch Adam with early stopping on validation loss (train loss when the
// validation set is empty). Restores the best parameters before returning.
TrainLog train(Network& net, const std::vector<std::vector<double>>& x,
               const std::vector<std::vector<double>>& y,
               const std::vector<std::vector<double>>& x_val,
               const std::vector<std::vector<double>>& y_val, const TrainOptions& opts);

double evaluate(const Network& net, const std::vector<std::vector<double>>& x,
                const std::vector<std::vector<double>>& y, LossKind kind);

// Checkpoints: self-describing JSON with layer specs and flat parameter
// arrays. Values round-trip bit-exactly.
nlohmann::json network_to_json(const Network& net);
Network network_from_json(const nlohmann::json& j);
void save_network(const Network& net, const std::string& path);
Network load_network(const std::string& path);

void write_train_log_csv(const TrainLog& log, const std::string& path);

}  // namespace fde::nn
