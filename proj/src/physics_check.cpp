#include "gatepilot/physics_check.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "gatepilot/gateworld.hpp"
#include "gatepilot/lagsim.hpp"

namespace gatepilot {

namespace {

using lagsim::VehicleState;

// Discrete unit step u[k] = 1 for k >= 0 applied from rest (v = 0).
std::vector<double> unit_step_response(const lagsim::AxisLag& lag, int steps) {
    std::vector<double> v;
    double vel = 0.0;
    double prev_cmd = 1.0;
    for (int k = 0; k < steps; ++k) {
        vel = lagsim::step_velocity(lag, vel, prev_cmd, 1.0);
        prev_cmd = 1.0;
        v.push_back(vel);
    }
    return v;
}

CheckResult step_fidelity() {
    const double tau = 0.4;
    const double ts = 0.02;
    const auto lag = lagsim::make_lag(tau, ts);
    const auto v = unit_step_response(lag, static_cast<int>(50 * tau / ts));
    const double v20 = v[19];
    const double final = v.back();
    double max_dev = 0.0;
    const int horizon = static_cast<int>(std::lround(5 * tau / ts));
    for (int k = 1; k <= horizon; ++k) {
        max_dev = std::max(max_dev, std::abs(v[k - 1] - (1.0 - std::exp(-k * ts / tau))));
    }
    const bool ok = std::abs(v20 - 0.632) <= 0.01 && std::abs(final - 1.0) <= 1e-6 && max_dev < 1e-3;
    return {"step response (tau=0.4, Ts=0.02)", ok,
            fmt::format("v(20)={:.6f} v(final)={:.9f} max|v-(1-exp(-t/tau))|={:.3e}", v20, final, max_dev)};
}

CheckResult dc_gain() {
    Rng rng(7);
    std::uniform_real_distribution<double> tau_dist(0.005, 5.0);
    std::uniform_real_distribution<double> cmd_dist(-3.0, 3.0);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const auto lag = lagsim::make_lag(tau_dist(rng), 0.02);
        const double c = cmd_dist(rng);
        worst = std::max(worst, std::abs(lagsim::step_velocity(lag, c, c, c) - c));
    }
    return {"unity DC gain", worst <= 1e-12, fmt::format("max |step(c,c,c)-c| = {:.3e}", worst)};
}

CheckResult boundedness() {
    Rng rng(11);
    std::bernoulli_distribution sign(0.5);
    double worst_ratio = 0.0;
    for (double tau : {0.01, 0.08, 0.1, 0.4, 2.0}) {
        const auto lag = lagsim::make_lag(tau, 0.02);
        double v = 0.0;
        double prev = 0.0;
        for (int k = 0; k < 10000; ++k) {
            const double cmd = sign(rng) ? 1.0 : -1.0;
            v = lagsim::step_velocity(lag, v, prev, cmd);
            prev = cmd;
            worst_ratio = std::max(worst_ratio, std::abs(v));
        }
    }
    return {"bounded command => bounded velocity", worst_ratio <= 1.0 + 1e-12,
            fmt::format("max |v| / |cmd|max = {:.6f}", worst_ratio)};
}

std::vector<VehicleState> stochastic_rollout(std::uint64_t seed) {
    gateworld::EnvConfig cfg;
    cfg.stochastic.enabled = true;
    gateworld::GateEnv env(cfg, seed);
    env.reset(seed);
    std::vector<VehicleState> states;
    for (int k = 0; k < 500 && !env.done(); ++k) {
        env.step({0.3, 0.0, 0.05, 0.0});
        states.push_back(env.state());
    }
    return states;
}

bool identical(const VehicleState& a, const VehicleState& b) {
    return a.pos == b.pos && a.yaw == b.yaw && a.vel == b.vel && a.yaw_rate == b.yaw_rate &&
           a.prev_cmd == b.prev_cmd;
}

CheckResult determinism() {
    const auto a = stochastic_rollout(1234);
    const auto b = stochastic_rollout(1234);
    bool same = a.size() == b.size();
    for (std::size_t i = 0; same && i < a.size(); ++i) same = identical(a[i], b[i]);
    return {"seeded determinism", same, fmt::format("{} stochastic steps compared", a.size())};
}

CheckResult zero_noise_equivalence() {
    const auto lags = lagsim::make_lags({0.4, 0.4, 0.1, 0.1}, 0.02);
    lagsim::NoiseConfig silent = lagsim::NoiseConfig::silent();
    Rng rng(3);
    VehicleState a;
    VehicleState b;
    a.pos = b.pos = {-6.0, 1.0, 0.5};
    bool same = true;
    for (long k = 1; k <= 1000 && same; ++k) {
        const Vec4 cmd{std::sin(k * 0.01), std::cos(k * 0.02), 0.3, -0.2};
        a = lagsim::sim_step(a, cmd, lags, silent, k, rng);
        const Vec4 prev = b.prev_cmd;
        VehicleState next = b;
        next.vel = {lagsim::step_velocity(lags[0], b.vel[0], prev[0], cmd[0]),
                    lagsim::step_velocity(lags[1], b.vel[1], prev[1], cmd[1]),
                    lagsim::step_velocity(lags[2], b.vel[2], prev[2], cmd[2])};
        next.yaw_rate = lagsim::step_velocity(lags[3], b.yaw_rate, prev[3], cmd[3]);
        next.prev_cmd = cmd;
        b = lagsim::integrate_pose(next, 0.02);
        same = identical(a, b);
    }
    return {"zero-noise path equals deterministic path", same, "1000 steps, bitwise"};
}

}  // namespace

std::vector<CheckResult> run_physics_checks() {
    return {step_fidelity(), dc_gain(), boundedness(), determinism(), zero_noise_equivalence()};
}

}  // namespace gatepilot
