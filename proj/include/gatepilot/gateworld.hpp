#pragma once

// Episodic gate-flying environment with a gym-style reset/step interface.
// World frame is East-North-Up with the gate centred at the origin and its
// normal along +X; the drone must cross the gate plane heading +X.

#include <array>
#include <cstdint>
#include <string_view>

#include "gatepilot/lagsim.hpp"
#include "gatepilot/types.hpp"

namespace gatepilot::gateworld {

using lagsim::VehicleState;

struct WorldSpec {
    Interval x_bounds{-10.0, 2.0};
    Interval y_bounds{-3.0, 3.0};
    Interval z_bounds{-1.5, 2.5};
    Vec4 vel_limits{2.0, 2.0, 1.0, kPi / 2.0};  ///< symmetric |vx|, |vy|, |vz|, |yaw rate|
    long timeout_steps = 2000;

    void validate() const;
    bool contains(const Vec3& p) const {
        return x_bounds.contains(p[0]) && y_bounds.contains(p[1]) && z_bounds.contains(p[2]);
    }
};

struct GateSpec {
    Vec3 outer_dims{0.15, 1.8, 1.22};
    double wall_thickness = 0.12;

    Vec3 outer_half() const { return {outer_dims[0] / 2, outer_dims[1] / 2, outer_dims[2] / 2}; }
    double opening_half_y() const { return outer_dims[1] / 2 - wall_thickness; }
    double opening_half_z() const { return outer_dims[2] / 2 - wall_thickness; }
    void validate() const;
};

struct DroneBox {
    Vec3 half_extents{0.3, 0.3, 0.1};
    void validate() const;
};

enum class EpisodeOutcome { Running, Success, GateCrash, GroundCrash, OutOfBounds, Timeout };

std::string_view to_string(EpisodeOutcome outcome);
EpisodeOutcome outcome_from_string(std::string_view name);

inline bool is_terminal(EpisodeOutcome o) {
    return o == EpisodeOutcome::Success || o == EpisodeOutcome::GateCrash ||
           o == EpisodeOutcome::GroundCrash || o == EpisodeOutcome::OutOfBounds;
}

/// x, y, z, yaw, vx, vy, vz, yaw_rate in the gate frame.
using Observation = std::array<double, 8>;
inline constexpr std::size_t kObsDim = 8;
inline constexpr std::size_t kActDim = 4;

struct StepResult {
    Observation obs{};
    double reward = 0.0;
    bool terminated = false;
    bool truncated = false;
    EpisodeOutcome outcome = EpisodeOutcome::Running;
    double dense = 0.0;        ///< shaping part of reward
    double final_bonus = 0.0;  ///< terminal bonus/penalty part of reward
    Vec4 command{};            ///< physical command that was applied
};

/// Maps a normalized action in [-1, 1]^4 onto the velocity limits.
/// Components up to 1e-9 outside the range are clipped; anything further throws InvalidAction.
Vec4 scale_action(const Vec4& normalized, const WorldSpec& world);

/// Inverse of scale_action with clipping to [-1, 1].
Vec4 normalize_command(const Vec4& command, const WorldSpec& world);

/// Gate-plane contact is checked first (the drone box overlapping the gate slab along X),
/// then ground, bounds, and timeout.
EpisodeOutcome classify(const VehicleState& state, const WorldSpec& world, const GateSpec& gate,
                        const DroneBox& drone, long step);

double dense_reward(const VehicleState& state);
double final_reward(EpisodeOutcome outcome, const VehicleState& state, const WorldSpec& world);

struct GatePose {
    Vec3 pos{};
    double yaw = 0.0;
};

/// Expresses the state relative to the gate: translate to the gate origin and
/// rotate horizontal position and velocity by -gate yaw.
Observation observe(const VehicleState& state, const GatePose& gate_pose);

struct EnvConfig {
    double ts = 0.02;
    bool wrap_yaw = false;
    bool normalize_obs = false;
    WorldSpec world;
    GateSpec gate;
    DroneBox drone;
    lagsim::NoiseConfig noise;
    lagsim::StochasticConfig stochastic;
    Interval spawn_x{-9.0, -4.0};
    Interval spawn_y{-2.0, 2.0};
    Interval spawn_z{-1.0, 1.5};
    Interval spawn_yaw{-kPi / 4.0, kPi / 4.0};

    void validate() const;
};

/// Divisors applied to observations when normalize_obs is on; all ones otherwise.
Observation observation_scale(const EnvConfig& cfg);

class GateEnv {
public:
    explicit GateEnv(EnvConfig config, std::uint64_t seed = 0);

    /// Starts a new episode from the random stream's current position.
    Observation reset();
    /// Reseeds the stream, then resets.
    Observation reset(std::uint64_t seed);
    /// Starts an episode from a given pose; velocities and prev_cmd are zeroed.
    Observation reset_to(const VehicleState& start);

    /// Throws ContractViolation when the episode has ended or was never started.
    StepResult step(const Vec4& action);

    const VehicleState& state() const { return state_; }
    const EnvConfig& config() const { return config_; }
    const Vec4& episode_taus() const { return taus_; }
    long step_count() const { return steps_; }
    bool done() const { return done_; }
    Observation observation() const;

private:
    void begin_episode(const VehicleState& start);

    EnvConfig config_;
    lagsim::NoiseConfig active_noise_;
    Rng rng_;
    VehicleState state_;
    lagsim::LagSet lags_{};
    Vec4 taus_{};
    long steps_ = 0;
    bool done_ = true;
};

}  // namespace gatepilot::gateworld
