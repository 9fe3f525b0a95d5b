#pragma once

// Dense multilayer perceptrons with hand-written reverse-mode gradients.
// Batched tensors are row-major: one sample per row.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "gatepilot/types.hpp"

namespace gatepilot::netcore {

enum class Activation : std::uint8_t { Linear = 0, Relu = 1, Tanh = 2 };

std::string_view to_string(Activation act);

struct LayerParams {
    std::size_t rows = 0;  ///< output width
    std::size_t cols = 0;  ///< input width
    std::vector<double> weights;  ///< rows x cols, row-major
    std::vector<double> biases;   ///< rows
    Activation activation = Activation::Linear;

    LayerParams() = default;
    LayerParams(std::size_t out, std::size_t in, Activation act)
        : rows(out), cols(in), weights(out * in, 0.0), biases(out, 0.0), activation(act) {}
};

struct MlpParams {
    std::vector<LayerParams> layers;
    /// Bumped by every library routine that mutates parameters; used to reject stale caches.
    std::uint64_t revision = 0;

    std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().cols; }
    std::size_t output_dim() const { return layers.empty() ? 0 : layers.back().rows; }
    std::size_t parameter_count() const;

    /// Throws ShapeError when consecutive layers disagree or buffers have the wrong size.
    void validate() const;

    /// Same shapes and activations, every value zero.
    MlpParams zeros_like() const;

    bool all_finite() const;

    friend bool operator==(const MlpParams& a, const MlpParams& b);
};

/// Throws ShapeError unless both networks have identical layer shapes.
void require_same_shape(const MlpParams& a, const MlpParams& b, const char* what);

struct InitOptions {
    /// Draw hidden biases from the Glorot normal as well instead of zero.
    bool glorot_hidden_bias = false;
    /// When positive, output-layer weights and biases come from U[-scale, scale].
    double output_uniform_scale = 0.0;
};

struct NetworkShape {
    std::vector<std::size_t> widths;  ///< input, hidden..., output
    std::vector<Activation> activations;  ///< one per layer
};

NetworkShape actor_shape(std::size_t obs_dim = 8, std::size_t act_dim = 4,
                         std::vector<std::size_t> hidden = {400, 300});
NetworkShape critic_shape(std::size_t obs_dim = 8, std::size_t act_dim = 4,
                          std::vector<std::size_t> hidden = {400, 300});

/// Glorot-normal weights, N(0, 2 / (fan_in + fan_out)).
MlpParams init_mlp(const NetworkShape& shape, Rng& rng, const InitOptions& opts = {});

/// Actor 8 -> 400 -> 300 -> 4 (relu, relu, tanh) with small-uniform output layer.
MlpParams init_actor(Rng& rng, std::vector<std::size_t> hidden = {400, 300},
                     double output_scale = 1e-3, bool glorot_hidden_bias = false);
/// Critic 12 -> 400 -> 300 -> 1 (relu, relu, linear), Glorot everywhere.
MlpParams init_critic(Rng& rng, std::vector<std::size_t> hidden = {400, 300},
                      bool glorot_hidden_bias = false);

/// Per-layer activations retained for the backward pass.
struct ForwardCache {
    std::size_t batch = 0;
    /// activations[0] is the input; activations[l + 1] is the post-activation of layer l.
    std::vector<std::vector<double>> activations;
    const MlpParams* owner = nullptr;
    std::uint64_t revision = 0;

    std::span<const double> output() const { return activations.back(); }
};

/// Batched forward pass; `input` holds batch rows of input_dim().
ForwardCache forward(const MlpParams& net, std::span<const double> input, std::size_t batch);
/// Single-sample convenience wrapper returning only the output.
std::vector<double> predict(const MlpParams& net, std::span<const double> input);

struct BackwardOptions {
    bool param_grads = true;
    bool input_grad = true;
};

struct BackwardResult {
    MlpParams param_grads;             ///< empty when not requested
    std::vector<double> grad_input;    ///< batch x input_dim, empty when not requested
};

/// Reverse-mode gradients of sum_b <output_b, grad_output_b>. Throws ContractViolation
/// if the cache was produced by a different network or before the last parameter update.
BackwardResult backward(const MlpParams& net, const ForwardCache& cache,
                        std::span<const double> grad_output, const BackwardOptions& opts = {});

enum class Optimizer : std::uint8_t { Adam = 0, Sgd = 1 };

struct AdamState {
    MlpParams m;
    MlpParams v;
    std::uint64_t t = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static AdamState for_params(const MlpParams& params, double beta1 = 0.9,
                                double beta2 = 0.999, double eps = 1e-8);
};

/// One bias-corrected Adam descent step: params -= lr * m_hat / (sqrt(v_hat) + eps).
void adam_step(MlpParams& params, const MlpParams& grads, AdamState& state, double lr);

/// Plain gradient descent step.
void sgd_step(MlpParams& params, const MlpParams& grads, double lr);

/// Convex blend target <- rho * target + (1 - rho) * main.
void polyak_update(MlpParams& target, const MlpParams& main, double rho);

}  // namespace gatepilot::netcore
