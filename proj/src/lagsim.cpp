#include "gatepilot/lagsim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gatepilot/errors.hpp"

namespace gatepilot::lagsim {

namespace {

double clipped_normal(double sigma, const Interval& clip, Rng& rng) {
    std::normal_distribution<double> dist(0.0, sigma);
    return std::clamp(dist(rng), clip.lo, clip.hi);
}

bool all_finite(const Vec4& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

void check_interval(const Interval& iv, const char* what) {
    if (!(iv.lo < iv.hi)) {
        throw InvalidParameter(std::string(what) + ": expected lo < hi");
    }
}

}  // namespace

bool VehicleState::is_finite() const {
    auto fin = [](double x) { return std::isfinite(x); };
    return std::all_of(pos.begin(), pos.end(), fin) && fin(yaw) &&
           std::all_of(vel.begin(), vel.end(), fin) && fin(yaw_rate) && all_finite(prev_cmd);
}

void NoiseConfig::validate() const {
    for (int i = 0; i < 4; ++i) {
        check_interval(vel_clip[i], "noise.vel_clip");
        check_interval(pos_clip[i], "noise.pos_clip");
        if (!(vel_sigma[i] >= 0.0) || !(pos_sigma[i] >= 0.0)) {
            throw InvalidParameter("noise sigma must be non-negative");
        }
    }
    if (drift_interval_steps < 1) {
        throw InvalidParameter("noise.drift_interval_steps must be >= 1");
    }
}

NoiseConfig NoiseConfig::silent() {
    NoiseConfig cfg;
    cfg.vel_sigma = {};
    cfg.pos_sigma = {};
    return cfg;
}

void StochasticConfig::validate() const {
    check_interval(tau_xy_bounds, "tau_xy_bounds");
    check_interval(tau_zyaw_bounds, "tau_zyaw_bounds");
    if (!(tau_xy_bounds.lo > 0.0) || !(tau_zyaw_bounds.lo > 0.0)) {
        throw InvalidParameter("time-constant bounds must be positive");
    }
    for (double tau : nominal_taus) {
        if (!(tau > 0.0)) throw InvalidParameter("nominal time constants must be positive");
    }
}

AxisLag make_lag(double tau, double ts) {
    if (!(tau > 0.0) || !std::isfinite(tau)) {
        throw InvalidParameter("lag time constant must be positive, got " + std::to_string(tau));
    }
    if (!(ts > 0.0) || !std::isfinite(ts)) {
        throw InvalidParameter("sample period must be positive, got " + std::to_string(ts));
    }
    const double den = 2.0 * tau + ts;
    return AxisLag{tau, ts, ts / den, (2.0 * tau - ts) / den};
}

LagSet make_lags(const Vec4& taus, double ts) {
    return {make_lag(taus[0], ts), make_lag(taus[1], ts), make_lag(taus[2], ts),
            make_lag(taus[3], ts)};
}

VehicleState integrate_pose(VehicleState state, double ts) {
    for (int i = 0; i < 3; ++i) state.pos[i] += state.vel[i] * ts;
    state.yaw += state.yaw_rate * ts;
    return state;
}

Vec4 apply_velocity_noise(Vec4 vel, const NoiseConfig& cfg, Rng& rng) {
    for (int i = 0; i < 4; ++i) {
        if (cfg.vel_sigma[i] > 0.0) vel[i] += clipped_normal(cfg.vel_sigma[i], cfg.vel_clip[i], rng);
    }
    return vel;
}

VehicleState apply_position_drift(VehicleState state, const NoiseConfig& cfg, long step_index,
                                  Rng& rng) {
    if (step_index % cfg.drift_interval_steps != 0) return state;
    for (int i = 0; i < 3; ++i) {
        if (cfg.pos_sigma[i] > 0.0) state.pos[i] += clipped_normal(cfg.pos_sigma[i], cfg.pos_clip[i], rng);
    }
    if (cfg.pos_sigma[3] > 0.0) state.yaw += clipped_normal(cfg.pos_sigma[3], cfg.pos_clip[3], rng);
    return state;
}

Vec4 sample_time_constants(const StochasticConfig& cfg, Rng& rng) {
    if (!cfg.enabled) return cfg.nominal_taus;
    std::uniform_real_distribution<double> xy(cfg.tau_xy_bounds.lo, cfg.tau_xy_bounds.hi);
    std::uniform_real_distribution<double> zyaw(cfg.tau_zyaw_bounds.lo, cfg.tau_zyaw_bounds.hi);
    Vec4 taus{};
    taus[0] = xy(rng);
    taus[1] = xy(rng);
    taus[2] = zyaw(rng);
    taus[3] = zyaw(rng);
    return taus;
}

double wrap_angle(double angle) {
    double w = std::remainder(angle, 2.0 * kPi);
    if (w <= -kPi) w += 2.0 * kPi;
    return w;
}

VehicleState sim_step(const VehicleState& state, const Vec4& cmd, const LagSet& lags,
                      const NoiseConfig& noise, long step_index, Rng& rng, bool wrap_yaw) {
    if (!state.is_finite() || !all_finite(cmd)) {
        throw InvalidState("sim_step: non-finite state or command");
    }
    const Vec4 rates = state.rates();
    Vec4 next{};
    for (int i = 0; i < 4; ++i) {
        next[i] = step_velocity(lags[i], rates[i], state.prev_cmd[i], cmd[i]);
    }
    next = apply_velocity_noise(next, noise, rng);

    VehicleState out = state;
    out.vel = {next[0], next[1], next[2]};
    out.yaw_rate = next[3];
    out.prev_cmd = cmd;
    out = integrate_pose(out, lags[0].ts);
    out = apply_position_drift(out, noise, step_index, rng);
    if (wrap_yaw) out.yaw = wrap_angle(out.yaw);
    return out;
}

}  // namespace gatepilot::lagsim
