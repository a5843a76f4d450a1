#include "fde/nn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "fde/kernels.hpp"

namespace fde::nn {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool all_finite(const double* v, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(v[i])) return false;
    }
    return true;
}

void check_layer_finite(const std::vector<double>& v, std::size_t layer_index) {
    if (!all_finite(v.data(), v.size())) {
        throw NumericError("non-finite value in layer " + std::to_string(layer_index));
    }
}

void validate_specs(const std::vector<LayerSpec>& specs) {
    if (specs.empty()) throw ShapeError("network needs at least one layer");
    for (std::size_t i = 0; i < specs.size(); ++i) {
        const auto& s = specs[i];
        if (s.in <= 0 || s.out <= 0 || s.timesteps <= 0) {
            throw ShapeError("layer " + std::to_string(i) + ": non-positive dimension");
        }
        if (s.kind == LayerKind::dense && s.timesteps != 1) {
            throw ShapeError("dense layer cannot have timesteps");
        }
        if (i > 0 && specs[i - 1].output_size() != s.input_size()) {
            throw ShapeError("layer " + std::to_string(i) + ": input size mismatch");
        }
    }
}

}  // namespace

const char* act_name(Act a) { return a == Act::relu ? "relu" : "identity"; }

const char* layer_kind_name(LayerKind k) {
    return k == LayerKind::dense ? "dense" : "pointwise_conv";
}

std::size_t Network::param_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weights.size() + l.bias.size();
    return n;
}

Network make_network(const std::vector<LayerSpec>& specs, Rng& rng) {
    validate_specs(specs);
    Network net;
    net.layers.reserve(specs.size());
    for (const auto& s : specs) {
        Layer layer;
        layer.spec = s;
        layer.weights = Matrix(s.in, s.out);
        layer.bias.assign(s.out, 0.0);
        double limit = std::sqrt(6.0 / s.in);
        for (double& w : layer.weights.values()) w = rng.uniform(-limit, limit);
        net.layers.push_back(std::move(layer));
    }
    return net;
}

void layer_forward(const Layer& layer, std::span<const double> in, std::vector<double>& pre,
                   std::vector<double>& post) {
    const auto& s = layer.spec;
    if (static_cast<int>(in.size()) != s.input_size()) {
        throw ShapeError("layer input size " + std::to_string(in.size()) + ", expected " +
                         std::to_string(s.input_size()));
    }
    pre.assign(s.output_size(), 0.0);
    for (int t = 0; t < s.timesteps; ++t) {
        double* out_row = pre.data() + static_cast<std::size_t>(t) * s.out;
        const double* in_row = in.data() + static_cast<std::size_t>(t) * s.in;
        std::copy(layer.bias.begin(), layer.bias.end(), out_row);
        for (int f = 0; f < s.in; ++f) {
            kernels::axpy(out_row, in_row[f], layer.weights.row(f), s.out);
        }
    }
    if (s.act == Act::relu) {
        post.resize(pre.size());
        kernels::relu(post.data(), pre.data(), pre.size());
    } else {
        post = pre;
    }
}

std::vector<double> forward(const Network& net, std::span<const double> input,
                            ForwardCache* cache) {
    if (net.layers.empty()) throw ShapeError("forward on empty network");
    if (cache) {
        cache->pre.resize(net.layers.size());
        cache->post.resize(net.layers.size());
    }
    std::vector<double> pre, post;
    std::span<const double> cur = input;
    std::vector<double> carried;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        layer_forward(net.layers[i], cur, pre, post);
        check_layer_finite(post, i);
        if (cache) {
            cache->pre[i] = pre;
            cache->post[i] = post;
        }
        carried = std::move(post);
        post.clear();
        cur = carried;
    }
    return carried;
}

double loss(std::span<const double> pred, std::span<const double> target, LossKind kind) {
    if (pred.size() != target.size()) throw ShapeError("loss: length mismatch");
    if (pred.empty()) throw DomainError("loss: empty input");
    double sum = kind == LossKind::mse ? kernels::sum_sq_diff(pred.data(), target.data(), pred.size())
                                       : kernels::sum_abs_diff(pred.data(), target.data(), pred.size());
    return sum / static_cast<double>(pred.size());
}

Gradients Gradients::zeros_like(const Network& net) {
    Gradients g;
    g.dw.reserve(net.layers.size());
    g.db.reserve(net.layers.size());
    for (const auto& l : net.layers) {
        g.dw.emplace_back(l.weights.rows(), l.weights.cols());
        g.db.emplace_back(l.bias.size(), 0.0);
    }
    return g;
}

namespace {

// Accumulates one sample's parameter gradients given dLoss/dOutput.
void backward(const Network& net, std::span<const double> input, const ForwardCache& cache,
              std::vector<double> d_out, Gradients& grads) {
    std::vector<double> d_pre, d_in;
    for (std::size_t li = net.layers.size(); li-- > 0;) {
        const Layer& layer = net.layers[li];
        const auto& s = layer.spec;
        if (s.act == Act::relu) {
            d_pre.resize(d_out.size());
            kernels::relu_backward(d_pre.data(), cache.pre[li].data(), d_out.data(), d_out.size());
        } else {
            d_pre = d_out;
        }
        std::span<const double> in =
            li == 0 ? input : std::span<const double>(cache.post[li - 1]);
        d_in.assign(s.input_size(), 0.0);
        Matrix& dw = grads.dw[li];
        std::vector<double>& db = grads.db[li];
        for (int t = 0; t < s.timesteps; ++t) {
            const double* in_row = in.data() + static_cast<std::size_t>(t) * s.in;
            const double* dp_row = d_pre.data() + static_cast<std::size_t>(t) * s.out;
            double* di_row = d_in.data() + static_cast<std::size_t>(t) * s.in;
            for (int j = 0; j < s.out; ++j) db[j] += dp_row[j];
            for (int f = 0; f < s.in; ++f) {
                kernels::axpy(dw.row(f), in_row[f], dp_row, s.out);
                di_row[f] = kernels::dot(layer.weights.row(f), dp_row, s.out);
            }
        }
        d_out = std::move(d_in);
        d_in.clear();
    }
}

}  // namespace

Gradients compute_gradients(const Network& net, const std::vector<std::vector<double>>& inputs,
                            const std::vector<std::vector<double>>& targets, LossKind kind,
                            double* out_loss) {
    if (inputs.empty() || inputs.size() != targets.size()) {
        throw ShapeError("compute_gradients: batch size mismatch");
    }
    Gradients grads = Gradients::zeros_like(net);
    ForwardCache cache;
    const double batch = static_cast<double>(inputs.size());
    double loss_acc = 0.0;
    std::vector<double> d_out;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        std::vector<double> pred = forward(net, inputs[i], &cache);
        const auto& target = targets[i];
        if (pred.size() != target.size()) throw ShapeError("compute_gradients: target size");
        loss_acc += loss(pred, target, kind);
        const double scale = 1.0 / (batch * static_cast<double>(pred.size()));
        d_out.resize(pred.size());
        for (std::size_t j = 0; j < pred.size(); ++j) {
            double r = pred[j] - target[j];
            d_out[j] = kind == LossKind::mse ? 2.0 * r * scale
                                             : (r > 0.0 ? scale : (r < 0.0 ? -scale : 0.0));
        }
        backward(net, inputs[i], cache, d_out, grads);
    }
    for (std::size_t li = 0; li < grads.dw.size(); ++li) {
        if (!all_finite(grads.dw[li].data(), grads.dw[li].size()) ||
            !all_finite(grads.db[li].data(), grads.db[li].size())) {
            throw NumericError("non-finite gradient in layer " + std::to_string(li));
        }
    }
    if (out_loss) *out_loss = loss_acc / batch;
    return grads;
}

AdamState AdamState::zeros_like(const Network& net) {
    AdamState st;
    for (const auto& l : net.layers) {
        st.mw.emplace_back(l.weights.rows(), l.weights.cols());
        st.vw.emplace_back(l.weights.rows(), l.weights.cols());
        st.mb.emplace_back(l.bias.size(), 0.0);
        st.vb.emplace_back(l.bias.size(), 0.0);
    }
    return st;
}

void adam_step(Network& net, AdamState& state, const Gradients& grads, const AdamConfig& cfg) {
    if (grads.dw.size() != net.layers.size()) throw ShapeError("adam_step: gradient shape");
    for (std::size_t li = 0; li < grads.dw.size(); ++li) {
        if (!all_finite(grads.dw[li].data(), grads.dw[li].size()) ||
            !all_finite(grads.db[li].data(), grads.db[li].size())) {
            throw NumericError("adam_step: non-finite gradient in layer " + std::to_string(li));
        }
    }
    state.step += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        Layer& l = net.layers[li];
        kernels::adam_update(l.weights.data(), state.mw[li].data(), state.vw[li].data(),
                             grads.dw[li].data(), l.weights.size(), cfg.lr, cfg.beta1, cfg.beta2,
                             cfg.eps, bc1, bc2);
        kernels::adam_update(l.bias.data(), state.mb[li].data(), state.vb[li].data(),
                             grads.db[li].data(), l.bias.size(), cfg.lr, cfg.beta1, cfg.beta2,
                             cfg.eps, bc1, bc2);
    }
}

double evaluate(const Network& net, const std::vector<std::vector<double>>& x,
                const std::vector<std::vector<double>>& y, LossKind kind) {
    if (x.empty()) return kNaN;
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        acc += loss(forward(net, x[i]), y[i], kind);
    }
    return acc / static_cast<double>(x.size());
}

TrainLog train(Network& net, const std::vector<std::vector<double>>& x,
               const std::vector<std::vector<double>>& y,
               const std::vector<std::vector<double>>& x_val,
               const std::vector<std::vector<double>>& y_val, const TrainOptions& opts) {
    if (x.empty()) throw TrainingError("train: empty training set");
    if (x.size() != y.size()) throw ShapeError("train: input/target count mismatch");
    TrainLog log;
    if (opts.max_epochs <= 0) return log;

    Rng rng(opts.seed);
    AdamState state = AdamState::zeros_like(net);
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    const bool has_val = !x_val.empty();
    double best = std::numeric_limits<double>::infinity();
    std::vector<Layer> best_layers = net.layers;
    int since_best = 0;

    std::vector<std::vector<double>> bx, by;
    for (int epoch = 0; epoch < opts.max_epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        std::size_t seen = 0;
        for (std::size_t start = 0; start < order.size(); start += opts.batch_size) {
            std::size_t stop = std::min(order.size(), start + opts.batch_size);
            bx.clear();
            by.clear();
            for (std::size_t k = start; k < stop; ++k) {
                bx.push_back(x[order[k]]);
                by.push_back(y[order[k]]);
            }
            double batch_loss = 0.0;
            Gradients grads;
            try {
                grads = compute_gradients(net, bx, by, opts.loss, &batch_loss);
            } catch (const NumericError& e) {
                throw TrainingError("epoch " + std::to_string(epoch) + ": " + e.what());
            }
            adam_step(net, state, grads, opts.adam);
            epoch_loss += batch_loss * static_cast<double>(stop - start);
            seen += stop - start;
        }
        epoch_loss /= static_cast<double>(seen);
        if (!std::isfinite(epoch_loss)) {
            throw TrainingError("divergence at epoch " + std::to_string(epoch));
        }
        double val_loss = has_val ? evaluate(net, x_val, y_val, opts.loss) : kNaN;
        log.epochs.push_back({epoch, epoch_loss, val_loss});

        double monitored = has_val ? val_loss : epoch_loss;
        if (monitored < best) {
            best = monitored;
            best_layers = net.layers;
            log.best_epoch = epoch;
            log.best_loss = best;
            since_best = 0;
        } else if (++since_best >= opts.patience) {
            break;
        }
    }
    net.layers = std::move(best_layers);
    return log;
}

nlohmann::json network_to_json(const Network& net) {
    nlohmann::json layers = nlohmann::json::array();
    nlohmann::json params = nlohmann::json::array();
    for (const auto& l : net.layers) {
        layers.push_back({{"kind", layer_kind_name(l.spec.kind)},
                          {"in", l.spec.in},
                          {"out", l.spec.out},
                          {"timesteps", l.spec.timesteps},
                          {"activation", act_name(l.spec.act)}});
        if (!all_finite(l.weights.data(), l.weights.size()) ||
            !all_finite(l.bias.data(), l.bias.size())) {
            throw NumericError("checkpoint: non-finite parameter");
        }
        params.push_back({{"weights", l.weights.values()}, {"bias", l.bias}});
    }
    return {{"format_version", 1}, {"layers", layers}, {"params", params}};
}

Network network_from_json(const nlohmann::json& j) {
    if (!j.contains("format_version") || j.at("format_version").get<int>() != 1) {
        throw DataError("checkpoint: unsupported format version");
    }
    const auto& layers = j.at("layers");
    const auto& params = j.at("params");
    if (layers.size() != params.size()) throw DataError("checkpoint: layer/param mismatch");
    Network net;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& lj = layers[i];
        Layer l;
        std::string kind = lj.at("kind").get<std::string>();
        if (kind == "dense") {
            l.spec.kind = LayerKind::dense;
        } else if (kind == "pointwise_conv") {
            l.spec.kind = LayerKind::pointwise_conv;
        } else {
            throw DataError("checkpoint: unknown layer kind " + kind);
        }
        l.spec.in = lj.at("in").get<int>();
        l.spec.out = lj.at("out").get<int>();
        l.spec.timesteps = lj.at("timesteps").get<int>();
        std::string act = lj.at("activation").get<std::string>();
        if (act == "relu") {
            l.spec.act = Act::relu;
        } else if (act == "identity") {
            l.spec.act = Act::identity;
        } else {
            throw DataError("checkpoint: unknown activation " + act);
        }
        auto w = params[i].at("weights").get<std::vector<double>>();
        auto b = params[i].at("bias").get<std::vector<double>>();
        if (w.size() != static_cast<std::size_t>(l.spec.in) * l.spec.out ||
            b.size() != static_cast<std::size_t>(l.spec.out)) {
            throw DataError("checkpoint: parameter shape mismatch in layer " + std::to_string(i));
        }
        l.weights = Matrix(l.spec.in, l.spec.out);
        l.weights.values() = std::move(w);
        l.bias = std::move(b);
        net.layers.push_back(std::move(l));
    }
    std::vector<LayerSpec> specs;
    for (const auto& l : net.layers) specs.push_back(l.spec);
    validate_specs(specs);
    return net;
}

void save_network(const Network& net, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write checkpoint: " + path);
    out << network_to_json(net).dump(2) << '\n';
}

Network load_network(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read checkpoint: " + path);
    nlohmann::json j;
    in >> j;
    return network_from_json(j);
}

void write_train_log_csv(const TrainLog& log, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write training log: " + path);
    out << "epoch,train_loss,val_loss\n";
    char buf[96];
    for (const auto& e : log.epochs) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g\n", e.epoch, e.train_loss, e.val_loss);
        out << buf;
    }
}

}  // namespace fde::nn
