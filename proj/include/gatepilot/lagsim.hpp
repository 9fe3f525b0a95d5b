#pragma once

// Point-mass quadcopter dynamics. Each velocity axis (x, y, z, yaw) follows a
// first-order lag  tau * dv/dt + v = v_cmd  discretized with the bilinear
// (Tustin) transform; pose is integrated with a zero-order hold.

#include <array>

#include "gatepilot/types.hpp"

namespace gatepilot::lagsim {

/// Tustin coefficients of one first-order lag axis.
struct AxisLag {
    double tau = 0.0;
    double ts = 0.0;
    double a = 0.0;  ///< ts / (2 tau + ts)
    double b = 0.0;  ///< (2 tau - ts) / (2 tau + ts)
};

/// Per-axis lags in (x, y, z, yaw) order.
using LagSet = std::array<AxisLag, 4>;

struct VehicleState {
    Vec3 pos{};
    double yaw = 0.0;
    Vec3 vel{};
    double yaw_rate = 0.0;
    Vec4 prev_cmd{};  ///< last applied command, the second input sample of the recursion

    bool is_finite() const;
    Vec4 rates() const { return {vel[0], vel[1], vel[2], yaw_rate}; }
};

/// Clipped-normal perturbation parameters, per axis in (x, y, z, yaw) order.
struct NoiseConfig {
    Vec4 vel_sigma{0.05, 0.05, 0.05, 0.05};
    std::array<Interval, 4> vel_clip{{{-0.1, 0.1}, {-0.1, 0.1}, {-0.1, 0.1}, {-0.1, 0.1}}};
    Vec4 pos_sigma{0.05, 0.05, 0.05, 0.02};
    std::array<Interval, 4> pos_clip{{{-0.15, 0.15}, {-0.15, 0.15}, {-0.15, 0.15}, {-0.06, 0.06}}};
    int drift_interval_steps = 25;  // twice a second at 50 Hz

    /// Throws InvalidParameter when a clip pair is inverted, a sigma negative or the interval < 1.
    void validate() const;

    /// Same clip ranges and cadence, every sigma zero.
    static NoiseConfig silent();
};

struct StochasticConfig {
    Interval tau_xy_bounds{0.35, 0.45};
    Interval tau_zyaw_bounds{0.08, 0.13};
    bool enabled = false;
    Vec4 nominal_taus{0.4, 0.4, 0.1, 0.1};

    void validate() const;
};

AxisLag make_lag(double tau, double ts);
LagSet make_lags(const Vec4& taus, double ts);

/// One Tustin update: a*cmd_new + a*cmd_prev + b*v_prev.
inline double step_velocity(const AxisLag& lag, double v_prev, double cmd_prev, double cmd_new) {
    return lag.a * cmd_new + lag.a * cmd_prev + lag.b * v_prev;
}

/// Advances pos and yaw by one zero-order-hold step of the current rates.
VehicleState integrate_pose(VehicleState state, double ts);

/// Adds an independent clipped-normal sample to each axis. Axes with zero sigma are untouched.
Vec4 apply_velocity_noise(Vec4 vel, const NoiseConfig& cfg, Rng& rng);

/// Perturbs x, y, z, yaw when step_index is a multiple of the drift interval.
VehicleState apply_position_drift(VehicleState state, const NoiseConfig& cfg, long step_index,
                                  Rng& rng);

/// Episode time constants (tau_x, tau_y, tau_z, tau_yaw). Nominal values when randomization is off.
Vec4 sample_time_constants(const StochasticConfig& cfg, Rng& rng);

/// Wraps an angle into (-pi, pi].
double wrap_angle(double angle);

/// Full simulator tick: lag update, velocity noise, pose integration, then scheduled drift.
/// The command becomes the new prev_cmd. Throws InvalidState on non-finite input.
VehicleState sim_step(const VehicleState& state, const Vec4& cmd, const LagSet& lags,
                      const NoiseConfig& noise, long step_index, Rng& rng,
                      bool wrap_yaw = false);

}  // namespace gatepilot::lagsim
