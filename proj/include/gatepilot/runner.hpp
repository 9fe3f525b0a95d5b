#pragma once

// Policy rollouts, evaluation summaries, the proportional-derivative baseline,
// and the on-disk artifacts of a training run (resolved config, metrics CSV,
// checkpoints, trajectories).

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gatepilot/config.hpp"
#include "gatepilot/gateworld.hpp"
#include "gatepilot/netcore.hpp"

namespace gatepilot::runner {

using gateworld::EpisodeOutcome;
using gateworld::Observation;

/// Maps an observation to a normalized action in [-1, 1]^4. Must be safe to call concurrently.
using Policy = std::function<Vec4(const Observation&)>;

Policy actor_policy(netcore::MlpParams actor);

/// cmd = -kp * (x, y, z, yaw) - kd * (vx, vy, vz, yaw_rate) in physical units, then
/// normalized and clipped to [-1, 1]. Undoes observation normalization when it is on.
Policy pd_policy(const Vec4& kp, const Vec4& kd, const gateworld::EnvConfig& env);

struct TrajectoryRow {
    long step = 0;
    double t = 0.0;
    lagsim::VehicleState state;
    Vec4 command{};
    double reward = 0.0;
    EpisodeOutcome outcome = EpisodeOutcome::Running;
};

struct EpisodeTrace {
    double ret = 0.0;
    EpisodeOutcome outcome = EpisodeOutcome::Running;
    long steps = 0;
    std::vector<TrajectoryRow> rows;  ///< filled only when recording
};

/// Resets `env` with `seed` and runs the policy until the episode ends.
EpisodeTrace run_episode(gateworld::GateEnv& env, const Policy& policy, std::uint64_t seed,
                         bool record = false);

/// Runs the episode from a fixed start pose instead of a random spawn.
EpisodeTrace run_episode_from(gateworld::GateEnv& env, const Policy& policy,
                              const lagsim::VehicleState& start, bool record = false);

struct EvalSummary {
    int episodes = 0;
    double success_rate = 0.0;
    double mean_return = 0.0;
    double std_return = 0.0;  ///< population standard deviation
    double mean_steps = 0.0;
    std::array<int, 6> outcome_counts{};  ///< indexed by EpisodeOutcome
    std::vector<double> returns;

    int count(EpisodeOutcome o) const { return outcome_counts[static_cast<int>(o)]; }
};

EvalSummary summarize(const std::vector<EpisodeTrace>& traces);

/// Episode i is reset with seed + i, so a rollout with the same seed reproduces episode 0.
/// Episodes fan out over OpenMP threads; the summary does not depend on the thread count.
EvalSummary evaluate(const Policy& policy, const gateworld::EnvConfig& env, int episodes,
                     std::uint64_t seed);

std::string summary_csv_header();
std::string summary_csv_row(const std::string& label, const EvalSummary& s);
std::string describe(const EvalSummary& s);

void write_trajectory_csv(const EpisodeTrace& trace, const std::string& path);

struct TrainRunResult {
    std::string run_dir;
    std::string final_checkpoint;
    std::uint64_t episodes = 0;
    std::vector<std::string> checkpoints;
};

/// Trains with `cfg` and writes into run_dir:
///   config.txt        resolved configuration
///   metrics.csv       episode,env_steps,return,outcome,duration_steps
///   timing.csv        episode,wall_seconds
///   checkpoints/step_<N>.bin every train.checkpoint_every steps
///   final.bin
/// On a non-finite loss the periodic checkpoints written so far are kept and the
/// NumericalError propagates.
TrainRunResult run_training(const RunConfig& cfg, const std::string& run_dir);

/// Appends a summary row to `path`, writing the header first when the file is new.
void append_summary(const std::string& path, const std::string& label, const EvalSummary& s);

}  // namespace gatepilot::runner
