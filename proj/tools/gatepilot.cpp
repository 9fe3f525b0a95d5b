// gatepilot: train, evaluate and replay TD3 gate-flying policies.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "gatepilot/checkpoint.hpp"
#include "gatepilot/config.hpp"
#include "gatepilot/errors.hpp"
#include "gatepilot/physics_check.hpp"
#include "gatepilot/runner.hpp"

namespace {

using namespace gatepilot;

struct CommonOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    bool stochastic = false;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("--config", opts.config_path, "key=value configuration file");
    cmd->add_option("--seed", opts.seed, "random seed (overrides config)");
    cmd->add_flag("--stochastic", opts.stochastic, "enable the randomized environment");
    cmd->add_option("--set", opts.overrides, "override a config key, e.g. --set td3.gamma=0.98");
}

RunConfig resolve(const CommonOptions& opts) {
    RunConfig cfg = opts.config_path.empty() ? RunConfig{} : load_config(opts.config_path);
    for (const std::string& kv : opts.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
        set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (opts.seed) cfg.seed = *opts.seed;
    if (opts.stochastic) cfg.env.stochastic.enabled = true;
    cfg.validate();
    return cfg;
}

// Logs go to stderr so stdout carries only the CSV summaries.
void init_logging() {
    spdlog::set_default_logger(spdlog::stderr_color_mt("gatepilot"));
    const char* level = std::getenv("GATEPILOT_LOG");
    spdlog::set_level(level ? spdlog::level::from_str(level) : spdlog::level::info);
    spdlog::set_pattern("[%H:%M:%S] %^%l%$ %v");
}

void warn_on_hash(const Checkpoint& ckpt, const RunConfig& cfg) {
    if (ckpt.config_hash != config_hash(cfg)) {
        spdlog::debug("checkpoint config hash {:08x} differs from the active config {:08x}",
                      ckpt.config_hash, config_hash(cfg));
    }
}

}  // namespace

int main(int argc, char** argv) {
    init_logging();
    CLI::App app{"Train, evaluate and replay TD3 velocity-controller policies for gate flying"};
    app.require_subcommand(1);

    CommonOptions train_opts;
    std::string train_out;
    std::optional<std::uint64_t> steps;
    auto* train = app.add_subcommand("train", "train a policy and write a run directory");
    add_common(train, train_opts);
    train->add_option("--steps", steps, "environment steps (default train.total_steps = 2.5e6)");
    train->add_option("--out", train_out, "run directory")->required();

    CommonOptions eval_opts;
    std::string eval_ckpt;
    std::string eval_out;
    std::optional<int> eval_episodes;
    auto* eval = app.add_subcommand("eval", "noise-free evaluation rollouts of a checkpoint");
    add_common(eval, eval_opts);
    eval->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required();
    eval->add_option("--episodes", eval_episodes, "episodes (default eval.episodes = 10)");
    eval->add_option("--out", eval_out, "append the summary row to this CSV");

    CommonOptions roll_opts;
    std::string roll_ckpt;
    std::string roll_out;
    auto* rollout = app.add_subcommand("rollout", "record one episode as a trajectory CSV");
    add_common(rollout, roll_opts);
    rollout->add_option("--checkpoint", roll_ckpt, "checkpoint file")->required();
    rollout->add_option("--out", roll_out, "trajectory CSV path")->required();

    CommonOptions base_opts;
    std::string base_out;
    std::optional<int> base_episodes;
    std::vector<double> kp;
    std::vector<double> kd;
    auto* baseline = app.add_subcommand("baseline", "evaluate the proportional-derivative controller");
    add_common(baseline, base_opts);
    baseline->add_option("--episodes", base_episodes, "episodes (default eval.episodes = 10)");
    baseline->add_option("--kp", kp, "proportional gains x y z yaw")->expected(4);
    baseline->add_option("--kd", kd, "derivative gains vx vy vz yaw_rate")->expected(4);
    baseline->add_option("--out", base_out, "append the summary row to this CSV");

    auto* physics = app.add_subcommand("physics-check", "run the lag-simulator self-test");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*train) {
            RunConfig cfg = resolve(train_opts);
            if (steps) cfg.total_steps = *steps;
            spdlog::info("training {} steps, seed {}, {} environment -> {}", cfg.total_steps, cfg.seed,
                         cfg.env.stochastic.enabled ? "stochastic" : "deterministic", train_out);
            const auto res = runner::run_training(cfg, train_out);
            spdlog::info("done: {} episodes, final checkpoint {}", res.episodes, res.final_checkpoint);
        } else if (*eval) {
            const RunConfig cfg = resolve(eval_opts);
            const Checkpoint ckpt = load_checkpoint(eval_ckpt);
            warn_on_hash(ckpt, cfg);
            const auto summary =
                runner::evaluate(runner::actor_policy(ckpt.network(NetworkRole::Actor).params), cfg.env,
                                 eval_episodes.value_or(cfg.eval_episodes), cfg.seed);
            std::cout << runner::summary_csv_header() << '\n'
                      << runner::summary_csv_row("eval", summary) << '\n';
            spdlog::info("{}", runner::describe(summary));
            if (!eval_out.empty()) runner::append_summary(eval_out, "eval", summary);
        } else if (*rollout) {
            const RunConfig cfg = resolve(roll_opts);
            const Checkpoint ckpt = load_checkpoint(roll_ckpt);
            warn_on_hash(ckpt, cfg);
            gateworld::GateEnv env(cfg.env, cfg.seed);
            const auto trace = runner::run_episode(
                env, runner::actor_policy(ckpt.network(NetworkRole::Actor).params), cfg.seed, true);
            runner::write_trajectory_csv(trace, roll_out);
            spdlog::info("{} steps, return {:.3f}, outcome {} -> {}", trace.steps, trace.ret,
                         gateworld::to_string(trace.outcome), roll_out);
        } else if (*baseline) {
            RunConfig cfg = resolve(base_opts);
            if (!kp.empty()) std::copy(kp.begin(), kp.end(), cfg.baseline_kp.begin());
            if (!kd.empty()) std::copy(kd.begin(), kd.end(), cfg.baseline_kd.begin());
            const auto summary = runner::evaluate(
                runner::pd_policy(cfg.baseline_kp, cfg.baseline_kd, cfg.env), cfg.env,
                base_episodes.value_or(cfg.eval_episodes), cfg.seed);
            std::cout << runner::summary_csv_header() << '\n'
                      << runner::summary_csv_row("baseline", summary) << '\n';
            spdlog::info("{}", runner::describe(summary));
            if (!base_out.empty()) runner::append_summary(base_out, "baseline", summary);
        } else if (*physics) {
            bool all_ok = true;
            for (const auto& r : run_physics_checks()) {
                std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
                all_ok = all_ok && r.passed;
            }
            return all_ok ? 0 : 1;
        }
    } catch (const gatepilot::Error& e) {
        spdlog::error("{}", e.what());
        return 2;
    }
    return 0;
}
