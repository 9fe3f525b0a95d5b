#include "gatepilot/gateworld.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gatepilot/errors.hpp"

namespace gatepilot::gateworld {

namespace {

constexpr double kActionSlack = 1e-9;

void check_interval(const Interval& iv, const char* name) {
    if (!(iv.lo < iv.hi)) throw InvalidParameter(std::string(name) + ": expected lo < hi");
}

}  // namespace

void WorldSpec::validate() const {
    check_interval(x_bounds, "env.x_bounds");
    check_interval(y_bounds, "env.y_bounds");
    check_interval(z_bounds, "env.z_bounds");
    for (double lim : vel_limits) {
        if (!(lim > 0.0)) throw InvalidParameter("env.vel_limits must be positive");
    }
    if (timeout_steps <= 0) throw InvalidParameter("env.timeout_steps must be positive");
}

void GateSpec::validate() const {
    for (double d : outer_dims) {
        if (!(d > 0.0)) throw InvalidParameter("gate dimensions must be positive");
    }
    if (!(wall_thickness > 0.0) || opening_half_y() <= 0.0 || opening_half_z() <= 0.0) {
        throw InvalidParameter("gate wall thickness leaves no opening");
    }
}

void DroneBox::validate() const {
    for (double h : half_extents) {
        if (!(h > 0.0)) throw InvalidParameter("drone box half-extents must be positive");
    }
}

void EnvConfig::validate() const {
    if (!(ts > 0.0)) throw InvalidParameter("sim.ts must be positive");
    world.validate();
    gate.validate();
    drone.validate();
    noise.validate();
    stochastic.validate();
    check_interval(spawn_x, "env.spawn_x");
    check_interval(spawn_y, "env.spawn_y");
    check_interval(spawn_z, "env.spawn_z");
    check_interval(spawn_yaw, "env.spawn_yaw");
}

std::string_view to_string(EpisodeOutcome outcome) {
    switch (outcome) {
        case EpisodeOutcome::Running: return "Running";
        case EpisodeOutcome::Success: return "Success";
        case EpisodeOutcome::GateCrash: return "GateCrash";
        case EpisodeOutcome::GroundCrash: return "GroundCrash";
        case EpisodeOutcome::OutOfBounds: return "OutOfBounds";
        case EpisodeOutcome::Timeout: return "Timeout";
    }
    return "Unknown";
}

EpisodeOutcome outcome_from_string(std::string_view name) {
    for (auto o : {EpisodeOutcome::Running, EpisodeOutcome::Success, EpisodeOutcome::GateCrash,
                   EpisodeOutcome::GroundCrash, EpisodeOutcome::OutOfBounds,
                   EpisodeOutcome::Timeout}) {
        if (to_string(o) == name) return o;
    }
    throw InvalidParameter("unknown outcome '" + std::string(name) + "'");
}

Vec4 scale_action(const Vec4& normalized, const WorldSpec& world) {
    Vec4 cmd{};
    for (int i = 0; i < 4; ++i) {
        const double u = normalized[i];
        if (!std::isfinite(u) || u < -1.0 - kActionSlack || u > 1.0 + kActionSlack) {
            throw InvalidAction("action component " + std::to_string(i) + " = " +
                                std::to_string(u) + " outside [-1, 1]");
        }
        cmd[i] = std::clamp(u, -1.0, 1.0) * world.vel_limits[i];
    }
    return cmd;
}

Vec4 normalize_command(const Vec4& command, const WorldSpec& world) {
    Vec4 out{};
    for (int i = 0; i < 4; ++i) out[i] = std::clamp(command[i] / world.vel_limits[i], -1.0, 1.0);
    return out;
}

EpisodeOutcome classify(const VehicleState& state, const WorldSpec& world, const GateSpec& gate,
                        const DroneBox& drone, long step) {
    const Vec3& p = state.pos;
    const Vec3 gh = gate.outer_half();
    const Vec3& dh = drone.half_extents;

    // Reaching the gate plane ends the episode either way: through the opening or into the frame.
    if (std::abs(p[0]) <= gh[0] + dh[0]) {
        const bool inside_opening = std::abs(p[1]) + dh[1] <= gate.opening_half_y() &&
                                    std::abs(p[2]) + dh[2] <= gate.opening_half_z();
        return inside_opening ? EpisodeOutcome::Success : EpisodeOutcome::GateCrash;
    }
    if (p[2] < world.z_bounds.lo) return EpisodeOutcome::GroundCrash;
    if (!world.contains(p)) return EpisodeOutcome::OutOfBounds;
    if (step >= world.timeout_steps) return EpisodeOutcome::Timeout;
    return EpisodeOutcome::Running;
}

double dense_reward(const VehicleState& state) {
    const double x = state.pos[0];
    const double y = state.pos[1];
    const double z = state.pos[2];
    double r = 3e-4 * (kPi / 4.0 - std::abs(state.yaw));
    if (x < 0.0 && state.vel[0] > 0.0) {
        r += 4e-2 * (1.0 - (x * x + y * y + z * z) / 15.0);
    } else if (x > 0.0) {
        r -= 5e-2;
    } else {
        r -= 1e-2;
    }
    return r;
}

double final_reward(EpisodeOutcome outcome, const VehicleState& state, const WorldSpec& world) {
    const double y = state.pos[1];
    const double z = state.pos[2];
    const double abs_yaw = std::abs(state.yaw);
    switch (outcome) {
        case EpisodeOutcome::Success: {
            double r = 100.0 + 200.0 * std::pow(100.0, -(y * y + z * z));
            if (abs_yaw < kPi / 6.0) r += 100.0 * (1.0 - 3.0 * abs_yaw / kPi);
            return r;
        }
        case EpisodeOutcome::GateCrash: return -20.0;
        case EpisodeOutcome::GroundCrash: return world.contains(state.pos) ? -20.0 : -25.0;
        case EpisodeOutcome::OutOfBounds: return -5.0;
        case EpisodeOutcome::Running:
        case EpisodeOutcome::Timeout: return 0.0;
    }
    return 0.0;
}

Observation observe(const VehicleState& state, const GatePose& gate_pose) {
    const double c = std::cos(gate_pose.yaw);
    const double s = std::sin(gate_pose.yaw);
    const double rx = state.pos[0] - gate_pose.pos[0];
    const double ry = state.pos[1] - gate_pose.pos[1];
    const double rz = state.pos[2] - gate_pose.pos[2];
    return {c * rx + s * ry,
            -s * rx + c * ry,
            rz,
            state.yaw - gate_pose.yaw,
            c * state.vel[0] + s * state.vel[1],
            -s * state.vel[0] + c * state.vel[1],
            state.vel[2],
            state.yaw_rate};
}

GateEnv::GateEnv(EnvConfig config, std::uint64_t seed)
    : config_(std::move(config)), rng_(seed) {
    config_.validate();
    active_noise_ = config_.stochastic.enabled ? config_.noise : lagsim::NoiseConfig::silent();
}

Observation GateEnv::reset() {
    std::uniform_real_distribution<double> ux(config_.spawn_x.lo, config_.spawn_x.hi);
    std::uniform_real_distribution<double> uy(config_.spawn_y.lo, config_.spawn_y.hi);
    std::uniform_real_distribution<double> uz(config_.spawn_z.lo, config_.spawn_z.hi);
    std::uniform_real_distribution<double> uyaw(config_.spawn_yaw.lo, config_.spawn_yaw.hi);
    VehicleState start;
    start.pos[0] = ux(rng_);
    start.pos[1] = uy(rng_);
    start.pos[2] = uz(rng_);
    start.yaw = uyaw(rng_);
    begin_episode(start);
    return observation();
}

Observation GateEnv::reset(std::uint64_t seed) {
    rng_.seed(seed);
    return reset();
}

Observation GateEnv::reset_to(const VehicleState& start) {
    if (!start.is_finite()) throw InvalidState("reset_to: non-finite start state");
    VehicleState s;
    s.pos = start.pos;
    s.yaw = start.yaw;
    begin_episode(s);
    return observation();
}

void GateEnv::begin_episode(const VehicleState& start) {
    state_ = start;
    taus_ = lagsim::sample_time_constants(config_.stochastic, rng_);
    lags_ = lagsim::make_lags(taus_, config_.ts);
    steps_ = 0;
    done_ = false;
}

Observation observation_scale(const EnvConfig& cfg) {
    Observation scale;
    scale.fill(1.0);
    if (!cfg.normalize_obs) return scale;
    const WorldSpec& w = cfg.world;
    const auto span = [](const Interval& iv) { return std::max(std::abs(iv.lo), std::abs(iv.hi)); };
    return {span(w.x_bounds), span(w.y_bounds), span(w.z_bounds), kPi,
            w.vel_limits[0],  w.vel_limits[1],  w.vel_limits[2],  w.vel_limits[3]};
}

Observation GateEnv::observation() const {
    Observation obs = observe(state_, GatePose{});
    if (config_.normalize_obs) {
        const Observation scale = observation_scale(config_);
        for (std::size_t i = 0; i < kObsDim; ++i) obs[i] /= scale[i];
    }
    return obs;
}

StepResult GateEnv::step(const Vec4& action) {
    if (done_) throw ContractViolation("step() called on an ended episode; call reset() first");
    const Vec4 cmd = scale_action(action, config_.world);
    ++steps_;
    state_ = lagsim::sim_step(state_, cmd, lags_, active_noise_, steps_, rng_, config_.wrap_yaw);

    StepResult res;
    res.command = cmd;
    res.outcome = classify(state_, config_.world, config_.gate, config_.drone, steps_);
    res.dense = dense_reward(state_);
    res.final_bonus = final_reward(res.outcome, state_, config_.world);
    res.reward = res.dense + res.final_bonus;
    res.terminated = is_terminal(res.outcome);
    res.truncated = res.outcome == EpisodeOutcome::Timeout;
    res.obs = observation();
    done_ = res.terminated || res.truncated;
    return res;
}

}  // namespace gatepilot::gateworld
