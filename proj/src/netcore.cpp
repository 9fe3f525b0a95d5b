#include "gatepilot/netcore.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gatepilot/errors.hpp"
#include "gatepilot/kernels.hpp"

namespace gatepilot::netcore {

namespace {

// tanh rounds to +-1 for |z| > ~19; keep the actor strictly inside (-1, 1).
const double kTanhCeiling = std::nextafter(1.0, 0.0);

void activate(Activation act, std::span<double> z) {
    switch (act) {
        case Activation::Linear: break;
        case Activation::Relu:
            for (double& v : z) v = v > 0.0 ? v : 0.0;
            break;
        case Activation::Tanh:
            for (double& v : z) v = std::clamp(std::tanh(v), -kTanhCeiling, kTanhCeiling);
            break;
    }
}

// delta <- delta * f'(z), expressed through the post-activation y = f(z).
void activation_backward(Activation act, std::span<const double> y, std::span<double> delta) {
    switch (act) {
        case Activation::Linear: break;
        case Activation::Relu:
            for (std::size_t i = 0; i < y.size(); ++i) {
                if (!(y[i] > 0.0)) delta[i] = 0.0;
            }
            break;
        case Activation::Tanh:
            for (std::size_t i = 0; i < y.size(); ++i) delta[i] *= 1.0 - y[i] * y[i];
            break;
    }
}

template <typename Fn>
void for_each_pair(MlpParams& a, const MlpParams& b, Fn fn) {
    for (std::size_t l = 0; l < a.layers.size(); ++l) {
        auto& la = a.layers[l];
        const auto& lb = b.layers[l];
        for (std::size_t i = 0; i < la.weights.size(); ++i) fn(la.weights[i], lb.weights[i]);
        for (std::size_t i = 0; i < la.biases.size(); ++i) fn(la.biases[i], lb.biases[i]);
    }
}

}  // namespace

std::string_view to_string(Activation act) {
    switch (act) {
        case Activation::Linear: return "linear";
        case Activation::Relu: return "relu";
        case Activation::Tanh: return "tanh";
    }
    return "unknown";
}

std::size_t MlpParams::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weights.size() + l.biases.size();
    return n;
}

void MlpParams::validate() const {
    if (layers.empty()) throw ShapeError("network has no layers");
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& layer = layers[l];
        if (layer.rows == 0 || layer.cols == 0) throw ShapeError("layer with zero width");
        if (layer.weights.size() != layer.rows * layer.cols || layer.biases.size() != layer.rows) {
            throw ShapeError("layer " + std::to_string(l) + " buffer size disagrees with its shape");
        }
        if (l > 0 && layer.cols != layers[l - 1].rows) {
            throw ShapeError("layer " + std::to_string(l) + " expects " +
                             std::to_string(layer.cols) + " inputs but previous layer emits " +
                             std::to_string(layers[l - 1].rows));
        }
    }
}

MlpParams MlpParams::zeros_like() const {
    MlpParams out;
    out.layers.reserve(layers.size());
    for (const auto& l : layers) out.layers.emplace_back(l.rows, l.cols, l.activation);
    return out;
}

bool MlpParams::all_finite() const {
    auto fin = [](double v) { return std::isfinite(v); };
    return std::all_of(layers.begin(), layers.end(), [&](const LayerParams& l) {
        return std::all_of(l.weights.begin(), l.weights.end(), fin) &&
               std::all_of(l.biases.begin(), l.biases.end(), fin);
    });
}

bool operator==(const MlpParams& a, const MlpParams& b) {
    if (a.layers.size() != b.layers.size()) return false;
    for (std::size_t l = 0; l < a.layers.size(); ++l) {
        const auto& x = a.layers[l];
        const auto& y = b.layers[l];
        if (x.rows != y.rows || x.cols != y.cols || x.activation != y.activation ||
            x.weights != y.weights || x.biases != y.biases) {
            return false;
        }
    }
    return true;
}

void require_same_shape(const MlpParams& a, const MlpParams& b, const char* what) {
    bool same = a.layers.size() == b.layers.size();
    for (std::size_t l = 0; same && l < a.layers.size(); ++l) {
        same = a.layers[l].rows == b.layers[l].rows && a.layers[l].cols == b.layers[l].cols &&
               a.layers[l].weights.size() == b.layers[l].weights.size() &&
               a.layers[l].biases.size() == b.layers[l].biases.size();
    }
    if (!same) throw ShapeError(std::string(what) + ": network shapes differ");
}

NetworkShape actor_shape(std::size_t obs_dim, std::size_t act_dim, std::vector<std::size_t> hidden) {
    NetworkShape s;
    s.widths.push_back(obs_dim);
    for (auto h : hidden) {
        s.widths.push_back(h);
        s.activations.push_back(Activation::Relu);
    }
    s.widths.push_back(act_dim);
    s.activations.push_back(Activation::Tanh);
    return s;
}

NetworkShape critic_shape(std::size_t obs_dim, std::size_t act_dim, std::vector<std::size_t> hidden) {
    NetworkShape s;
    s.widths.push_back(obs_dim + act_dim);
    for (auto h : hidden) {
        s.widths.push_back(h);
        s.activations.push_back(Activation::Relu);
    }
    s.widths.push_back(1);
    s.activations.push_back(Activation::Linear);
    return s;
}

MlpParams init_mlp(const NetworkShape& shape, Rng& rng, const InitOptions& opts) {
    if (shape.widths.size() < 2 || shape.activations.size() + 1 != shape.widths.size()) {
        throw ShapeError("network shape needs one activation per layer");
    }
    MlpParams net;
    const std::size_t n_layers = shape.activations.size();
    for (std::size_t l = 0; l < n_layers; ++l) {
        const std::size_t in = shape.widths[l];
        const std::size_t out = shape.widths[l + 1];
        LayerParams layer(out, in, shape.activations[l]);
        const bool is_output = l + 1 == n_layers;
        if (is_output && opts.output_uniform_scale > 0.0) {
            std::uniform_real_distribution<double> u(-opts.output_uniform_scale,
                                                     opts.output_uniform_scale);
            for (double& w : layer.weights) w = u(rng);
            for (double& b : layer.biases) b = u(rng);
        } else {
            std::normal_distribution<double> g(0.0, std::sqrt(2.0 / static_cast<double>(in + out)));
            for (double& w : layer.weights) w = g(rng);
            if (opts.glorot_hidden_bias) {
                for (double& b : layer.biases) b = g(rng);
            }
        }
        net.layers.push_back(std::move(layer));
    }
    return net;
}

MlpParams init_actor(Rng& rng, std::vector<std::size_t> hidden, double output_scale,
                     bool glorot_hidden_bias) {
    return init_mlp(actor_shape(8, 4, std::move(hidden)), rng,
                    InitOptions{glorot_hidden_bias, output_scale});
}

MlpParams init_critic(Rng& rng, std::vector<std::size_t> hidden, bool glorot_hidden_bias) {
    return init_mlp(critic_shape(8, 4, std::move(hidden)), rng,
                    InitOptions{glorot_hidden_bias, 0.0});
}

ForwardCache forward(const MlpParams& net, std::span<const double> input, std::size_t batch) {
    if (net.layers.empty()) throw ShapeError("forward on an empty network");
    if (batch == 0 || input.size() != batch * net.input_dim()) {
        throw ShapeError("forward: input has " + std::to_string(input.size()) +
                         " values, expected batch " + std::to_string(batch) + " x " +
                         std::to_string(net.input_dim()));
    }
    ForwardCache cache;
    cache.batch = batch;
    cache.owner = &net;
    cache.revision = net.revision;
    cache.activations.reserve(net.layers.size() + 1);
    cache.activations.emplace_back(input.begin(), input.end());
    for (const auto& layer : net.layers) {
        std::vector<double> z(batch * layer.rows);
        kernels::parallel::forward({batch, layer.cols, layer.rows}, cache.activations.back(),
                                   layer.weights, layer.biases, z);
        activate(layer.activation, z);
        cache.activations.push_back(std::move(z));
    }
    return cache;
}

std::vector<double> predict(const MlpParams& net, std::span<const double> input) {
    ForwardCache cache = forward(net, input, 1);
    return std::move(cache.activations.back());
}

BackwardResult backward(const MlpParams& net, const ForwardCache& cache,
                        std::span<const double> grad_output, const BackwardOptions& opts) {
    if (cache.owner != &net || cache.revision != net.revision ||
        cache.activations.size() != net.layers.size() + 1) {
        throw ContractViolation("backward: cache does not belong to the current network state");
    }
    const std::size_t batch = cache.batch;
    if (grad_output.size() != batch * net.output_dim()) {
        throw ShapeError("backward: grad_output has " + std::to_string(grad_output.size()) +
                         " values, expected " + std::to_string(batch * net.output_dim()));
    }

    BackwardResult res;
    if (opts.param_grads) res.param_grads = net.zeros_like();

    std::vector<double> delta(grad_output.begin(), grad_output.end());
    for (std::size_t l = net.layers.size(); l-- > 0;) {
        const auto& layer = net.layers[l];
        const kernels::DenseShape shape{batch, layer.cols, layer.rows};
        activation_backward(layer.activation, cache.activations[l + 1], delta);
        if (opts.param_grads) {
            auto& g = res.param_grads.layers[l];
            kernels::parallel::backward_params(shape, delta, cache.activations[l], g.weights,
                                               g.biases);
        }
        if (l > 0 || opts.input_grad) {
            std::vector<double> next(batch * layer.cols);
            kernels::parallel::backward_input(shape, delta, layer.weights, next);
            delta = std::move(next);
        }
    }
    if (opts.input_grad) res.grad_input = std::move(delta);
    return res;
}

AdamState AdamState::for_params(const MlpParams& params, double beta1, double beta2, double eps) {
    AdamState s;
    s.m = params.zeros_like();
    s.v = params.zeros_like();
    s.beta1 = beta1;
    s.beta2 = beta2;
    s.eps = eps;
    return s;
}

void adam_step(MlpParams& params, const MlpParams& grads, AdamState& state, double lr) {
    require_same_shape(params, grads, "adam_step");
    require_same_shape(params, state.m, "adam_step moments");
    require_same_shape(params, state.v, "adam_step moments");
    if (!(lr > 0.0)) throw InvalidParameter("learning rate must be positive");

    ++state.t;
    const double t = static_cast<double>(state.t);
    const double c1 = 1.0 - std::pow(state.beta1, t);
    const double c2 = 1.0 - std::pow(state.beta2, t);
    const double b1 = state.beta1;
    const double b2 = state.beta2;
    const double eps = state.eps;

    auto update = [&](std::vector<double>& p, const std::vector<double>& g, std::vector<double>& m,
                      std::vector<double>& v) {
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            const double m_hat = m[i] / c1;
            const double v_hat = v[i] / c2;
            p[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
        }
    };
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        auto& pl = params.layers[l];
        const auto& gl = grads.layers[l];
        update(pl.weights, gl.weights, state.m.layers[l].weights, state.v.layers[l].weights);
        update(pl.biases, gl.biases, state.m.layers[l].biases, state.v.layers[l].biases);
    }
    ++params.revision;
}

void sgd_step(MlpParams& params, const MlpParams& grads, double lr) {
    require_same_shape(params, grads, "sgd_step");
    if (!(lr > 0.0)) throw InvalidParameter("learning rate must be positive");
    for_each_pair(params, grads, [lr](double& p, double g) { p -= lr * g; });
    ++params.revision;
}

void polyak_update(MlpParams& target, const MlpParams& main, double rho) {
    require_same_shape(target, main, "polyak_update");
    if (!(rho >= 0.0 && rho <= 1.0)) throw InvalidParameter("polyak rho must lie in [0, 1]");
    const double keep = rho;
    const double take = 1.0 - rho;
    for_each_pair(target, main, [keep, take](double& t, double m) { t = keep * t + take * m; });
    ++target.revision;
}

}  // namespace gatepilot::netcore
