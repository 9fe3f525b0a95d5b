#pragma once

// Twin Delayed Deep Deterministic policy gradient (TD3) for the gate environment:
// replay memory, Ornstein-Uhlenbeck exploration, clipped double-Q targets with
// target-policy smoothing, delayed actor updates and Polyak-averaged targets.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "gatepilot/gateworld.hpp"
#include "gatepilot/netcore.hpp"
#include "gatepilot/types.hpp"

namespace gatepilot::td3core {

using gateworld::EpisodeOutcome;
using gateworld::Observation;
using gateworld::kActDim;
using gateworld::kObsDim;
using netcore::AdamState;
using netcore::MlpParams;

struct Transition {
    Observation s{};
    Vec4 a{};  ///< normalized action in [-1, 1]
    double r = 0.0;
    Observation s_next{};
    bool d = false;  ///< true terminal (bootstrapping masked)
};

/// Column-major view of sampled transitions; row b of each array belongs to sample b.
struct Batch {
    std::size_t size = 0;
    std::vector<double> s;       ///< size x 8
    std::vector<double> a;       ///< size x 4
    std::vector<double> r;       ///< size
    std::vector<double> s_next;  ///< size x 8
    std::vector<double> d;       ///< size, 1.0 for terminal
    std::vector<std::size_t> indices;  ///< storage slot of each sample
};

Batch make_batch(std::span<const Transition> transitions);

class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);

    /// Appends, overwriting the oldest entry once full.
    void store(const Transition& t);

    /// n uniform draws with replacement. Throws InsufficientData when size() < n.
    Batch sample_batch(std::size_t n, Rng& rng) const;

    std::size_t size() const { return storage_.size(); }
    std::size_t capacity() const { return capacity_; }
    /// Storage slot access; slot order is not insertion order once the ring wraps.
    const Transition& slot(std::size_t i) const { return storage_.at(i); }
    /// i-th oldest stored transition.
    const Transition& oldest(std::size_t i) const;

private:
    std::size_t capacity_;
    std::size_t cursor_ = 0;
    std::vector<Transition> storage_;
};

struct OuProcess {
    double theta = 0.2;
    double sigma = 0.15;
    double mu = 0.0;
    Vec4 x{};

    void reset() { x = {}; }
    void validate() const;
};

/// x <- x + theta (mu - x) + sigma N(0, 1), per component, unit time step.
Vec4 ou_sample(OuProcess& proc, Rng& rng);

struct Td3Config {
    double actor_lr = 1e-5;
    double critic_lr = 2e-5;
    double polyak = 0.999;  ///< weight kept by the target per update
    double target_noise_sigma = 0.2;
    double target_noise_clip = 0.5;
    double gamma = 0.99;
    std::size_t batch_size = 100;
    std::uint64_t policy_delay = 2;
    std::size_t buffer_capacity = 1'000'000;
    std::size_t learning_starts = 100;
    std::uint64_t warmup_steps = 0;  ///< uniform-random actions before the policy takes over
    double ou_theta = 0.2;
    double ou_sigma = 0.15;

    std::vector<std::size_t> hidden{400, 300};
    double actor_output_init = 1e-3;
    bool glorot_hidden_bias = false;
    netcore::Optimizer optimizer = netcore::Optimizer::Adam;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;

    void validate() const;
};

struct TrainerState {
    MlpParams actor, critic1, critic2;
    MlpParams target_actor, target_critic1, target_critic2;
    AdamState actor_opt, critic1_opt, critic2_opt;
    std::uint64_t env_steps = 0;
    std::uint64_t updates = 0;        ///< critic updates, the counter j
    std::uint64_t actor_updates = 0;
    std::uint64_t episodes = 0;
};

/// Fresh networks with targets copied bit-for-bit from the main networks.
TrainerState init_trainer(const Td3Config& cfg, Rng& rng);

/// Deterministic policy output for one observation.
Vec4 policy_action(const MlpParams& actor, const Observation& obs);

/// clip(actor(obs) + OU sample, -1, 1).
Vec4 select_action(const MlpParams& actor, const Observation& obs, OuProcess& proc, Rng& rng);

struct TargetActions {
    std::vector<double> actions;  ///< size x 4, clipped to [-1, 1]
    std::vector<double> noise;    ///< size x 4, smoothing noise after clipping to [-c, c]
};

TargetActions target_actions(const Batch& batch, const MlpParams& target_actor, double sigma,
                             double clip, Rng& rng);

struct TargetValues {
    std::vector<double> y;   ///< r + gamma (1 - d) min(q1, q2)
    std::vector<double> q1;  ///< target critic 1 at (s', a')
    std::vector<double> q2;
};

TargetValues compute_targets(const Batch& batch, const MlpParams& target_critic1,
                             const MlpParams& target_critic2, std::span<const double> next_actions,
                             double gamma);

/// Row-wise concatenation of states (n x 8) and actions (n x 4) into critic inputs.
std::vector<double> critic_input(std::span<const double> states, std::span<const double> actions,
                                 std::size_t n);

struct LossGradient {
    double value = 0.0;
    MlpParams grads;
};

/// Mean squared Bellman error (1/|B|) sum (Q(s,a) - y)^2 and its parameter gradient.
LossGradient critic_loss_gradient(const Batch& batch, std::span<const double> targets,
                                  const MlpParams& critic);

/// Mean Q(s, actor(s)) over the batch and its gradient with respect to the actor parameters.
LossGradient actor_objective_gradient(const Batch& batch, const MlpParams& actor,
                                      const MlpParams& critic);

struct CriticLosses {
    double q1 = 0.0;
    double q2 = 0.0;
};

/// One optimizer step on each critic; returns the pre-update losses.
CriticLosses critic_update(const Batch& batch, std::span<const double> targets, TrainerState& st,
                           const Td3Config& cfg);

/// One ascent step of the actor on mean critic-1 value; returns the pre-update objective.
double actor_update(const Batch& batch, TrainerState& st, const Td3Config& cfg);

/// Polyak-blends all three target networks toward their main networks.
void update_targets(TrainerState& st, double rho);

struct EpisodeRecord {
    std::uint64_t episode = 0;
    std::uint64_t env_steps = 0;  ///< cumulative env steps when the episode ended
    double ret = 0.0;
    EpisodeOutcome outcome = EpisodeOutcome::Running;
    long duration_steps = 0;
    double wall_seconds = 0.0;
};

struct UpdateInfo {
    std::uint64_t j = 0;
    bool actor_updated = false;
    const Batch* batch = nullptr;
    const TargetValues* targets = nullptr;
    CriticLosses losses;
    const TrainerState* state = nullptr;
};

struct TrainCallbacks {
    std::function<void(const EpisodeRecord&)> on_episode;
    std::function<void(const UpdateInfo&)> on_update;
    std::function<void(const Transition&)> on_transition;
    /// Called after every environment step with the current trainer state.
    std::function<void(const TrainerState&)> on_step;
};

/// Drives one environment for `total_steps` steps, learning online. Deterministic in
/// (env config, td3 config, seed). Throws NumericalError if a loss becomes non-finite.
class Trainer {
public:
    Trainer(gateworld::EnvConfig env_cfg, Td3Config cfg, std::uint64_t seed);

    void run(std::uint64_t total_steps, const TrainCallbacks& callbacks = {});

    const TrainerState& state() const { return state_; }
    TrainerState& mutable_state() { return state_; }
    const ReplayBuffer& buffer() const { return buffer_; }
    const OuProcess& exploration() const { return ou_; }
    const Td3Config& config() const { return cfg_; }

private:
    void update(const TrainCallbacks& callbacks);

    Td3Config cfg_;
    gateworld::GateEnv env_;
    Rng rng_;
    TrainerState state_;
    ReplayBuffer buffer_;
    OuProcess ou_;
    Observation obs_{};
    double episode_return_ = 0.0;
    bool needs_reset_ = true;
};

/// Convenience wrapper: builds a Trainer and runs it.
TrainerState train(const gateworld::EnvConfig& env_cfg, const Td3Config& cfg,
                   std::uint64_t total_steps, std::uint64_t seed,
                   const TrainCallbacks& callbacks = {});

/// Independent random stream `stream` derived from a run seed.
Rng derive_rng(std::uint64_t seed, std::uint64_t stream);

}  // namespace gatepilot::td3core
