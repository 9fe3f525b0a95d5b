#include "gatepilot/runner.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "gatepilot/checkpoint.hpp"
#include "gatepilot/errors.hpp"
#include "gatepilot/td3core.hpp"

namespace gatepilot::runner {

namespace fs = std::filesystem;

namespace {

std::ofstream open_for_write(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path, "cannot open for writing");
    return out;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw IoError(dir, "cannot create directory");
}

EpisodeTrace drive(gateworld::GateEnv& env, const Policy& policy, Observation obs, bool record) {
    EpisodeTrace trace;
    const double ts = env.config().ts;
    while (!env.done()) {
        const gateworld::StepResult res = env.step(policy(obs));
        trace.ret += res.reward;
        trace.outcome = res.outcome;
        obs = res.obs;
        if (record) {
            trace.rows.push_back({env.step_count(), static_cast<double>(env.step_count()) * ts,
                                  env.state(), res.command, res.reward, res.outcome});
        }
    }
    trace.steps = env.step_count();
    return trace;
}

}  // namespace

Policy actor_policy(netcore::MlpParams actor) {
    auto net = std::make_shared<const netcore::MlpParams>(std::move(actor));
    return [net](const Observation& obs) { return td3core::policy_action(*net, obs); };
}

Policy pd_policy(const Vec4& kp, const Vec4& kd, const gateworld::EnvConfig& env) {
    for (int i = 0; i < 4; ++i) {
        if (!std::isfinite(kp[i]) || !std::isfinite(kd[i])) throw InvalidParameter("PD gains must be finite");
    }
    const Observation scale = gateworld::observation_scale(env);
    const gateworld::WorldSpec world = env.world;
    return [kp, kd, scale, world](const Observation& o) {
        Vec4 cmd{};
        for (int i = 0; i < 4; ++i) {
            const double pos = o[i] * scale[i];
            const double rate = o[i + 4] * scale[i + 4];
            cmd[i] = -kp[i] * pos - kd[i] * rate;
        }
        return gateworld::normalize_command(cmd, world);
    };
}

EpisodeTrace run_episode(gateworld::GateEnv& env, const Policy& policy, std::uint64_t seed,
                         bool record) {
    return drive(env, policy, env.reset(seed), record);
}

EpisodeTrace run_episode_from(gateworld::GateEnv& env, const Policy& policy,
                              const lagsim::VehicleState& start, bool record) {
    return drive(env, policy, env.reset_to(start), record);
}

EvalSummary summarize(const std::vector<EpisodeTrace>& traces) {
    EvalSummary s;
    s.episodes = static_cast<int>(traces.size());
    if (traces.empty()) return s;
    double steps = 0.0;
    for (const auto& t : traces) {
        s.returns.push_back(t.ret);
        s.mean_return += t.ret;
        steps += static_cast<double>(t.steps);
        ++s.outcome_counts[static_cast<int>(t.outcome)];
    }
    const double n = static_cast<double>(traces.size());
    s.mean_return /= n;
    s.mean_steps = steps / n;
    double var = 0.0;
    for (double r : s.returns) var += (r - s.mean_return) * (r - s.mean_return);
    s.std_return = std::sqrt(var / n);
    s.success_rate = s.count(EpisodeOutcome::Success) / n;
    return s;
}

EvalSummary evaluate(const Policy& policy, const gateworld::EnvConfig& env, int episodes,
                     std::uint64_t seed) {
    if (episodes < 1) throw InvalidParameter("evaluation needs at least one episode");
    std::vector<EpisodeTrace> traces(static_cast<std::size_t>(episodes));
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < episodes; ++i) {
        gateworld::GateEnv local(env, seed + static_cast<std::uint64_t>(i));
        traces[static_cast<std::size_t>(i)] =
            run_episode(local, policy, seed + static_cast<std::uint64_t>(i));
    }
    return summarize(traces);
}

std::string summary_csv_header() {
    return "label,episodes,success_rate,mean_return,std_return,mean_steps,success,gate_crash,"
           "ground_crash,out_of_bounds,timeout";
}

std::string summary_csv_row(const std::string& label, const EvalSummary& s) {
    return fmt::format("{},{},{},{},{},{},{},{},{},{},{}", label, s.episodes, s.success_rate,
                       s.mean_return, s.std_return, s.mean_steps, s.count(EpisodeOutcome::Success),
                       s.count(EpisodeOutcome::GateCrash), s.count(EpisodeOutcome::GroundCrash),
                       s.count(EpisodeOutcome::OutOfBounds), s.count(EpisodeOutcome::Timeout));
}

std::string describe(const EvalSummary& s) {
    return fmt::format(
        "episodes={} success_rate={:.3f} mean_return={:.3f} std_return={:.3f} mean_steps={:.1f} "
        "[success={} gate_crash={} ground_crash={} out_of_bounds={} timeout={}]",
        s.episodes, s.success_rate, s.mean_return, s.std_return, s.mean_steps,
        s.count(EpisodeOutcome::Success), s.count(EpisodeOutcome::GateCrash),
        s.count(EpisodeOutcome::GroundCrash), s.count(EpisodeOutcome::OutOfBounds),
        s.count(EpisodeOutcome::Timeout));
}

void append_summary(const std::string& path, const std::string& label, const EvalSummary& s) {
    const bool fresh = !fs::exists(path);
    std::ofstream out(path, std::ios::app);
    if (!out) throw IoError(path, "cannot open for appending");
    if (fresh) out << summary_csv_header() << '\n';
    out << summary_csv_row(label, s) << '\n';
    if (!out) throw IoError(path, "write failed");
}

void write_trajectory_csv(const EpisodeTrace& trace, const std::string& path) {
    std::ofstream out = open_for_write(path);
    out << "step,t,x,y,z,yaw,vx,vy,vz,yaw_rate,cmd_vx,cmd_vy,cmd_vz,cmd_yaw_rate,reward,outcome\n";
    for (const TrajectoryRow& r : trace.rows) {
        const auto& s = r.state;
        out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", r.step, r.t, s.pos[0],
                           s.pos[1], s.pos[2], s.yaw, s.vel[0], s.vel[1], s.vel[2], s.yaw_rate,
                           r.command[0], r.command[1], r.command[2], r.command[3], r.reward,
                           gateworld::to_string(r.outcome));
    }
    if (!out) throw IoError(path, "write failed");
}

TrainRunResult run_training(const RunConfig& cfg, const std::string& run_dir) {
    cfg.validate();
    ensure_dir(run_dir);
    const std::string ckpt_dir = (fs::path(run_dir) / "checkpoints").string();
    ensure_dir(ckpt_dir);

    {
        const std::string path = (fs::path(run_dir) / "config.txt").string();
        std::ofstream out = open_for_write(path);
        out << to_text(cfg);
        if (!out) throw IoError(path, "write failed");
    }
    const std::string metrics_path = (fs::path(run_dir) / "metrics.csv").string();
    const std::string timing_path = (fs::path(run_dir) / "timing.csv").string();
    std::ofstream metrics = open_for_write(metrics_path);
    std::ofstream timing = open_for_write(timing_path);
    metrics << "episode,env_steps,return,outcome,duration_steps\n";
    timing << "episode,wall_seconds\n";

    const std::uint32_t hash = config_hash(cfg);
    TrainRunResult result;
    result.run_dir = run_dir;

    td3core::TrainCallbacks cb;
    cb.on_episode = [&](const td3core::EpisodeRecord& rec) {
        metrics << fmt::format("{},{},{},{},{}\n", rec.episode, rec.env_steps, rec.ret,
                               gateworld::to_string(rec.outcome), rec.duration_steps);
        metrics.flush();
        timing << fmt::format("{},{:.3f}\n", rec.episode, rec.wall_seconds);
        result.episodes = rec.episode + 1;
        if ((rec.episode + 1) % 100 == 0) {
            spdlog::info("episode {} env_steps {} return {:.2f} outcome {}", rec.episode,
                         rec.env_steps, rec.ret, gateworld::to_string(rec.outcome));
        }
    };
    cb.on_step = [&](const td3core::TrainerState& st) {
        if (st.env_steps % cfg.checkpoint_every == 0 && st.env_steps < cfg.total_steps) {
            const std::string path =
                (fs::path(ckpt_dir) / fmt::format("step_{:09d}.bin", st.env_steps)).string();
            save_checkpoint(make_checkpoint(st, hash), path);
            result.checkpoints.push_back(path);
            spdlog::info("checkpoint {}", path);
        }
    };

    td3core::Trainer trainer(cfg.env, cfg.td3, cfg.seed);
    try {
        trainer.run(cfg.total_steps, cb);
    } catch (const NumericalError& e) {
        spdlog::error("training aborted: {} (last good checkpoint: {})", e.what(),
                      result.checkpoints.empty() ? std::string("none") : result.checkpoints.back());
        throw;
    }
    if (!metrics) throw IoError(metrics_path, "write failed");

    result.final_checkpoint = (fs::path(run_dir) / "final.bin").string();
    save_checkpoint(make_checkpoint(trainer.state(), hash), result.final_checkpoint);
    return result;
}

}  // namespace gatepilot::runner
