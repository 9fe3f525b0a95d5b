#include "gatepilot/td3core.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "gatepilot/errors.hpp"

namespace gatepilot::td3core {

namespace {

void optimizer_step(netcore::MlpParams& params, const netcore::MlpParams& grads,
                    netcore::AdamState& opt, double lr, netcore::Optimizer kind) {
    if (kind == netcore::Optimizer::Adam) {
        netcore::adam_step(params, grads, opt, lr);
    } else {
        netcore::sgd_step(params, grads, lr);
    }
}

void negate(netcore::MlpParams& grads) {
    for (auto& l : grads.layers) {
        for (double& v : l.weights) v = -v;
        for (double& v : l.biases) v = -v;
    }
}

}  // namespace

Rng derive_rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), 0x6a7e9170u};
    return Rng(seq);
}

Batch make_batch(std::span<const Transition> transitions) {
    Batch b;
    b.size = transitions.size();
    b.s.reserve(b.size * kObsDim);
    b.a.reserve(b.size * kActDim);
    b.s_next.reserve(b.size * kObsDim);
    b.r.reserve(b.size);
    b.d.reserve(b.size);
    for (std::size_t i = 0; i < transitions.size(); ++i) {
        const Transition& t = transitions[i];
        b.s.insert(b.s.end(), t.s.begin(), t.s.end());
        b.a.insert(b.a.end(), t.a.begin(), t.a.end());
        b.r.push_back(t.r);
        b.s_next.insert(b.s_next.end(), t.s_next.begin(), t.s_next.end());
        b.d.push_back(t.d ? 1.0 : 0.0);
        b.indices.push_back(i);
    }
    return b;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw InvalidParameter("replay buffer capacity must be positive");
}

void ReplayBuffer::store(const Transition& t) {
    if (storage_.size() < capacity_) {
        storage_.push_back(t);
    } else {
        storage_[cursor_] = t;
    }
    cursor_ = (cursor_ + 1) % capacity_;
}

const Transition& ReplayBuffer::oldest(std::size_t i) const {
    if (i >= storage_.size()) throw InsufficientData("replay buffer index out of range");
    if (storage_.size() < capacity_) return storage_[i];
    return storage_[(cursor_ + i) % capacity_];
}

Batch ReplayBuffer::sample_batch(std::size_t n, Rng& rng) const {
    if (n == 0 || storage_.size() < n) {
        throw InsufficientData("cannot sample " + std::to_string(n) + " transitions from a buffer of " +
                               std::to_string(storage_.size()));
    }
    std::uniform_int_distribution<std::size_t> pick(0, storage_.size() - 1);
    std::vector<Transition> drawn;
    drawn.reserve(n);
    std::vector<std::size_t> slots;
    slots.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        slots.push_back(pick(rng));
        drawn.push_back(storage_[slots.back()]);
    }
    Batch b = make_batch(drawn);
    b.indices = std::move(slots);
    return b;
}

void OuProcess::validate() const {
    if (!(theta > 0.0 && theta < 1.0)) throw InvalidParameter("OU theta must lie in (0, 1)");
    if (!(sigma >= 0.0)) throw InvalidParameter("OU sigma must be non-negative");
}

Vec4 ou_sample(OuProcess& proc, Rng& rng) {
    std::normal_distribution<double> n01(0.0, 1.0);
    for (double& x : proc.x) {
        const double drift = proc.theta * (proc.mu - x);
        x += proc.sigma > 0.0 ? drift + proc.sigma * n01(rng) : drift;
    }
    return proc.x;
}

void Td3Config::validate() const {
    if (!(actor_lr > 0.0) || !(critic_lr > 0.0)) throw InvalidParameter("learning rates must be positive");
    if (!(polyak > 0.0 && polyak < 1.0)) throw InvalidParameter("td3.polyak must lie in (0, 1)");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw InvalidParameter("td3.gamma must lie in [0, 1]");
    if (!(target_noise_sigma >= 0.0) || !(target_noise_clip >= 0.0)) {
        throw InvalidParameter("target noise parameters must be non-negative");
    }
    if (batch_size == 0) throw InvalidParameter("td3.batch_size must be positive");
    if (policy_delay == 0) throw InvalidParameter("td3.policy_delay must be >= 1");
    if (buffer_capacity < batch_size) throw InvalidParameter("td3.buffer_capacity smaller than a batch");
    if (hidden.empty()) throw InvalidParameter("net.hidden needs at least one layer");
    OuProcess{ou_theta, ou_sigma}.validate();
}

TrainerState init_trainer(const Td3Config& cfg, Rng& rng) {
    TrainerState st;
    st.actor = netcore::init_actor(rng, cfg.hidden, cfg.actor_output_init, cfg.glorot_hidden_bias);
    st.critic1 = netcore::init_critic(rng, cfg.hidden, cfg.glorot_hidden_bias);
    st.critic2 = netcore::init_critic(rng, cfg.hidden, cfg.glorot_hidden_bias);
    st.target_actor = st.actor;
    st.target_critic1 = st.critic1;
    st.target_critic2 = st.critic2;
    st.actor_opt = AdamState::for_params(st.actor, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
    st.critic1_opt = AdamState::for_params(st.critic1, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
    st.critic2_opt = AdamState::for_params(st.critic2, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
    return st;
}

Vec4 policy_action(const MlpParams& actor, const Observation& obs) {
    const std::vector<double> out = netcore::predict(actor, obs);
    if (out.size() != kActDim) throw ShapeError("actor must emit 4 actions");
    return {out[0], out[1], out[2], out[3]};
}

Vec4 select_action(const MlpParams& actor, const Observation& obs, OuProcess& proc, Rng& rng) {
    Vec4 a = policy_action(actor, obs);
    const Vec4 eps = ou_sample(proc, rng);
    for (std::size_t i = 0; i < kActDim; ++i) a[i] = std::clamp(a[i] + eps[i], -1.0, 1.0);
    return a;
}

TargetActions target_actions(const Batch& batch, const MlpParams& target_actor, double sigma,
                             double clip, Rng& rng) {
    const netcore::ForwardCache fc = netcore::forward(target_actor, batch.s_next, batch.size);
    const std::span<const double> mu = fc.output();
    TargetActions out;
    out.actions.resize(mu.size());
    out.noise.assign(mu.size(), 0.0);
    std::normal_distribution<double> noise(0.0, sigma > 0.0 ? sigma : 1.0);
    for (std::size_t i = 0; i < mu.size(); ++i) {
        if (sigma > 0.0) out.noise[i] = std::clamp(noise(rng), -clip, clip);
        out.actions[i] = std::clamp(mu[i] + out.noise[i], -1.0, 1.0);
    }
    return out;
}

std::vector<double> critic_input(std::span<const double> states, std::span<const double> actions,
                                 std::size_t n) {
    if (states.size() != n * kObsDim || actions.size() != n * kActDim) {
        throw ShapeError("critic_input: state/action rows disagree with batch size");
    }
    std::vector<double> x;
    x.reserve(n * (kObsDim + kActDim));
    for (std::size_t b = 0; b < n; ++b) {
        x.insert(x.end(), states.begin() + b * kObsDim, states.begin() + (b + 1) * kObsDim);
        x.insert(x.end(), actions.begin() + b * kActDim, actions.begin() + (b + 1) * kActDim);
    }
    return x;
}

TargetValues compute_targets(const Batch& batch, const MlpParams& target_critic1,
                             const MlpParams& target_critic2, std::span<const double> next_actions,
                             double gamma) {
    const std::vector<double> x = critic_input(batch.s_next, next_actions, batch.size);
    const netcore::ForwardCache f1 = netcore::forward(target_critic1, x, batch.size);
    const netcore::ForwardCache f2 = netcore::forward(target_critic2, x, batch.size);
    TargetValues tv;
    tv.q1.assign(f1.output().begin(), f1.output().end());
    tv.q2.assign(f2.output().begin(), f2.output().end());
    tv.y.resize(batch.size);
    for (std::size_t b = 0; b < batch.size; ++b) {
        tv.y[b] = batch.r[b] + gamma * (1.0 - batch.d[b]) * std::min(tv.q1[b], tv.q2[b]);
    }
    return tv;
}

LossGradient critic_loss_gradient(const Batch& batch, std::span<const double> targets,
                                  const MlpParams& critic) {
    if (batch.size == 0) throw InsufficientData("critic update on an empty batch");
    if (targets.size() != batch.size) throw ShapeError("critic targets disagree with batch size");
    const std::vector<double> x = critic_input(batch.s, batch.a, batch.size);
    const netcore::ForwardCache fc = netcore::forward(critic, x, batch.size);
    const std::span<const double> q = fc.output();
    const double inv_n = 1.0 / static_cast<double>(batch.size);
    std::vector<double> grad_q(batch.size);
    LossGradient out;
    for (std::size_t b = 0; b < batch.size; ++b) {
        const double err = q[b] - targets[b];
        out.value += err * err;
        grad_q[b] = 2.0 * err * inv_n;
    }
    out.value *= inv_n;
    out.grads = netcore::backward(critic, fc, grad_q, {.param_grads = true, .input_grad = false})
                    .param_grads;
    return out;
}

LossGradient actor_objective_gradient(const Batch& batch, const MlpParams& actor,
                                      const MlpParams& critic) {
    if (batch.size == 0) throw InsufficientData("actor update on an empty batch");
    const netcore::ForwardCache fa = netcore::forward(actor, batch.s, batch.size);
    const std::vector<double> x = critic_input(batch.s, fa.output(), batch.size);
    const netcore::ForwardCache fq = netcore::forward(critic, x, batch.size);
    const double inv_n = 1.0 / static_cast<double>(batch.size);

    LossGradient out;
    for (double q : fq.output()) out.value += q;
    out.value *= inv_n;

    const std::vector<double> dq(batch.size, inv_n);
    const std::vector<double> dx =
        netcore::backward(critic, fq, dq, {.param_grads = false, .input_grad = true}).grad_input;
    std::vector<double> da(batch.size * kActDim);
    constexpr std::size_t width = kObsDim + kActDim;
    for (std::size_t b = 0; b < batch.size; ++b) {
        for (std::size_t k = 0; k < kActDim; ++k) da[b * kActDim + k] = dx[b * width + kObsDim + k];
    }
    out.grads =
        netcore::backward(actor, fa, da, {.param_grads = true, .input_grad = false}).param_grads;
    return out;
}

CriticLosses critic_update(const Batch& batch, std::span<const double> targets, TrainerState& st,
                           const Td3Config& cfg) {
    LossGradient g1 = critic_loss_gradient(batch, targets, st.critic1);
    LossGradient g2 = critic_loss_gradient(batch, targets, st.critic2);
    if (!std::isfinite(g1.value) || !std::isfinite(g2.value)) {
        throw NumericalError("critic loss became non-finite at update " + std::to_string(st.updates));
    }
    optimizer_step(st.critic1, g1.grads, st.critic1_opt, cfg.critic_lr, cfg.optimizer);
    optimizer_step(st.critic2, g2.grads, st.critic2_opt, cfg.critic_lr, cfg.optimizer);
    return {g1.value, g2.value};
}

double actor_update(const Batch& batch, TrainerState& st, const Td3Config& cfg) {
    LossGradient g = actor_objective_gradient(batch, st.actor, st.critic1);
    if (!std::isfinite(g.value)) {
        throw NumericalError("actor objective became non-finite at update " + std::to_string(st.updates));
    }
    negate(g.grads);  // ascend mean Q
    optimizer_step(st.actor, g.grads, st.actor_opt, cfg.actor_lr, cfg.optimizer);
    return g.value;
}

void update_targets(TrainerState& st, double rho) {
    netcore::polyak_update(st.target_critic1, st.critic1, rho);
    netcore::polyak_update(st.target_critic2, st.critic2, rho);
    netcore::polyak_update(st.target_actor, st.actor, rho);
}

Trainer::Trainer(gateworld::EnvConfig env_cfg, Td3Config cfg, std::uint64_t seed)
    : cfg_(std::move(cfg)),
      env_(std::move(env_cfg), seed),
      rng_(derive_rng(seed, 1)),
      buffer_(cfg_.buffer_capacity),
      ou_{cfg_.ou_theta, cfg_.ou_sigma} {
    cfg_.validate();
    Rng init_rng = derive_rng(seed, 0);
    state_ = init_trainer(cfg_, init_rng);
    env_.reset(seed);
    obs_ = env_.observation();
    needs_reset_ = false;
}

void Trainer::update(const TrainCallbacks& callbacks) {
    const Batch batch = buffer_.sample_batch(cfg_.batch_size, rng_);
    const TargetActions ta =
        target_actions(batch, state_.target_actor, cfg_.target_noise_sigma, cfg_.target_noise_clip, rng_);
    const TargetValues tv =
        compute_targets(batch, state_.target_critic1, state_.target_critic2, ta.actions, cfg_.gamma);

    UpdateInfo info;
    info.losses = critic_update(batch, tv.y, state_, cfg_);
    info.j = ++state_.updates;
    if (info.j % cfg_.policy_delay == 0) {
        actor_update(batch, state_, cfg_);
        update_targets(state_, cfg_.polyak);
        ++state_.actor_updates;
        info.actor_updated = true;
    }
    if (callbacks.on_update) {
        info.batch = &batch;
        info.targets = &tv;
        info.state = &state_;
        callbacks.on_update(info);
    }
}

void Trainer::run(std::uint64_t total_steps, const TrainCallbacks& callbacks) {
    const auto t0 = std::chrono::steady_clock::now();
    std::uniform_real_distribution<double> uniform(-1.0, 1.0);
    const std::size_t learn_after = std::max(cfg_.learning_starts, cfg_.batch_size);

    for (std::uint64_t i = 0; i < total_steps; ++i) {
        if (needs_reset_) {
            obs_ = env_.reset();
            ou_.reset();
            episode_return_ = 0.0;
            needs_reset_ = false;
        }
        Vec4 action;
        if (state_.env_steps < cfg_.warmup_steps) {
            for (double& a : action) a = uniform(rng_);
        } else {
            action = select_action(state_.actor, obs_, ou_, rng_);
        }
        const gateworld::StepResult res = env_.step(action);
        const Transition tr{obs_, action, res.reward, res.obs, res.terminated};
        buffer_.store(tr);
        if (callbacks.on_transition) callbacks.on_transition(tr);
        ++state_.env_steps;
        episode_return_ += res.reward;
        obs_ = res.obs;

        if (res.terminated || res.truncated) {
            EpisodeRecord rec;
            rec.episode = state_.episodes++;
            rec.env_steps = state_.env_steps;
            rec.ret = episode_return_;
            rec.outcome = res.outcome;
            rec.duration_steps = env_.step_count();
            rec.wall_seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            if (callbacks.on_episode) callbacks.on_episode(rec);
            needs_reset_ = true;
        }

        if (buffer_.size() >= learn_after) update(callbacks);
        if (callbacks.on_step) callbacks.on_step(state_);
    }
}

TrainerState train(const gateworld::EnvConfig& env_cfg, const Td3Config& cfg,
                   std::uint64_t total_steps, std::uint64_t seed, const TrainCallbacks& callbacks) {
    Trainer trainer(env_cfg, cfg, seed);
    trainer.run(total_steps, callbacks);
    return trainer.state();
}

}  // namespace gatepilot::td3core
