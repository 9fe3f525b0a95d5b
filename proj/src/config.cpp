#include "gatepilot/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <zlib.h>

#include "gatepilot/errors.hpp"

namespace gatepilot {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

double to_double(std::string_view s) {
    s = trim(s);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw ConfigError("not a number: '" + std::string(s) + "'");
    }
    return v;
}

std::uint64_t to_u64(std::string_view s) {
    s = trim(s);
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        // allow scientific shorthand such as 2.5e6 for step counts
        const double d = to_double(s);
        if (d < 0 || d != static_cast<double>(static_cast<std::uint64_t>(d))) {
            throw ConfigError("not a non-negative integer: '" + std::string(s) + "'");
        }
        return static_cast<std::uint64_t>(d);
    }
    return v;
}

bool to_bool(std::string_view s) {
    s = trim(s);
    if (s == "true" || s == "1" || s == "on") return true;
    if (s == "false" || s == "0" || s == "off") return false;
    throw ConfigError("not a boolean: '" + std::string(s) + "'");
}

std::vector<double> to_list(std::string_view s, std::size_t expected) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto comma = s.find(',', start);
        const auto end = comma == std::string_view::npos ? s.size() : comma;
        out.push_back(to_double(s.substr(start, end - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    if (expected != 0 && out.size() != expected) {
        throw ConfigError("expected " + std::to_string(expected) + " comma-separated values, got " +
                          std::to_string(out.size()));
    }
    return out;
}

std::string num(double v) { return fmt::format("{}", v); }

std::string join(const double* v, std::size_t n) {
    std::string out;
    for (std::size_t i = 0; i < n; ++i) {
        if (i) out += ',';
        out += num(v[i]);
    }
    return out;
}

std::string bool_text(bool b) { return b ? "true" : "false"; }

struct Field {
    std::string key;
    std::function<void(RunConfig&, std::string_view)> set;
    std::function<std::string(const RunConfig&)> get;
};

template <typename Get>
Field real(std::string key, Get get) {
    return {std::move(key),
            [get](RunConfig& c, std::string_view v) { get(c) = to_double(v); },
            [get](const RunConfig& c) { return num(get(c)); }};
}

template <typename T, typename Get>
Field integer(std::string key, Get get) {
    return {std::move(key),
            [get](RunConfig& c, std::string_view v) { get(c) = static_cast<T>(to_u64(v)); },
            [get](const RunConfig& c) { return std::to_string(get(c)); }};
}

template <typename Get>
Field flag(std::string key, Get get) {
    return {std::move(key), [get](RunConfig& c, std::string_view v) { get(c) = to_bool(v); },
            [get](const RunConfig& c) { return bool_text(get(c)); }};
}

template <std::size_t N, typename Get>
Field array(std::string key, Get get) {
    return {std::move(key),
            [get](RunConfig& c, std::string_view v) {
                const auto vals = to_list(v, N);
                auto& dst = get(c);
                for (std::size_t i = 0; i < N; ++i) dst[i] = vals[i];
            },
            [get](const RunConfig& c) { return join(get(c).data(), N); }};
}

template <typename Get>
Field interval(std::string key, Get get) {
    return {std::move(key),
            [get](RunConfig& c, std::string_view v) {
                const auto vals = to_list(v, 2);
                get(c) = Interval{vals[0], vals[1]};
            },
            [get](const RunConfig& c) {
                const Interval& iv = get(c);
                return num(iv.lo) + "," + num(iv.hi);
            }};
}

// Per-axis clip bounds live in an array of intervals; expose lo and hi as separate keys.
template <typename Get>
Field clip_side(std::string key, Get get, bool upper) {
    return {std::move(key),
            [get, upper](RunConfig& c, std::string_view v) {
                const auto vals = to_list(v, 4);
                auto& clips = get(c);
                for (std::size_t i = 0; i < 4; ++i) (upper ? clips[i].hi : clips[i].lo) = vals[i];
            },
            [get, upper](const RunConfig& c) {
                const auto& clips = get(c);
                double v[4];
                for (std::size_t i = 0; i < 4; ++i) v[i] = upper ? clips[i].hi : clips[i].lo;
                return join(v, 4);
            }};
}

const std::vector<Field>& fields() {
    static const std::vector<Field> table = [] {
        std::vector<Field> f;
        f.push_back(integer<std::uint64_t>("seed", [](auto& c) -> auto& { return c.seed; }));

        f.push_back(real("sim.ts", [](auto& c) -> auto& { return c.env.ts; }));
        f.push_back(flag("sim.wrap_yaw", [](auto& c) -> auto& { return c.env.wrap_yaw; }));
        f.push_back(flag("sim.stochastic", [](auto& c) -> auto& { return c.env.stochastic.enabled; }));
        f.push_back(array<4>("sim.tau_nominal", [](auto& c) -> auto& { return c.env.stochastic.nominal_taus; }));
        f.push_back(interval("sim.tau_xy_bounds", [](auto& c) -> auto& { return c.env.stochastic.tau_xy_bounds; }));
        f.push_back(interval("sim.tau_zyaw_bounds", [](auto& c) -> auto& { return c.env.stochastic.tau_zyaw_bounds; }));

        f.push_back(array<4>("noise.vel_sigma", [](auto& c) -> auto& { return c.env.noise.vel_sigma; }));
        f.push_back(clip_side("noise.vel_clip_min", [](auto& c) -> auto& { return c.env.noise.vel_clip; }, false));
        f.push_back(clip_side("noise.vel_clip_max", [](auto& c) -> auto& { return c.env.noise.vel_clip; }, true));
        f.push_back(array<4>("noise.pos_sigma", [](auto& c) -> auto& { return c.env.noise.pos_sigma; }));
        f.push_back(clip_side("noise.pos_clip_min", [](auto& c) -> auto& { return c.env.noise.pos_clip; }, false));
        f.push_back(clip_side("noise.pos_clip_max", [](auto& c) -> auto& { return c.env.noise.pos_clip; }, true));
        f.push_back(integer<int>("noise.drift_interval_steps", [](auto& c) -> auto& { return c.env.noise.drift_interval_steps; }));

        f.push_back(interval("env.x_bounds", [](auto& c) -> auto& { return c.env.world.x_bounds; }));
        f.push_back(interval("env.y_bounds", [](auto& c) -> auto& { return c.env.world.y_bounds; }));
        f.push_back(interval("env.z_bounds", [](auto& c) -> auto& { return c.env.world.z_bounds; }));
        f.push_back(array<4>("env.vel_limits", [](auto& c) -> auto& { return c.env.world.vel_limits; }));
        f.push_back(integer<long>("env.timeout_steps", [](auto& c) -> auto& { return c.env.world.timeout_steps; }));
        f.push_back(array<3>("env.gate_outer_dims", [](auto& c) -> auto& { return c.env.gate.outer_dims; }));
        f.push_back(real("env.gate_wall_thickness", [](auto& c) -> auto& { return c.env.gate.wall_thickness; }));
        f.push_back(array<3>("env.drone_half_extents", [](auto& c) -> auto& { return c.env.drone.half_extents; }));
        f.push_back(interval("env.spawn_x", [](auto& c) -> auto& { return c.env.spawn_x; }));
        f.push_back(interval("env.spawn_y", [](auto& c) -> auto& { return c.env.spawn_y; }));
        f.push_back(interval("env.spawn_z", [](auto& c) -> auto& { return c.env.spawn_z; }));
        f.push_back(interval("env.spawn_yaw", [](auto& c) -> auto& { return c.env.spawn_yaw; }));
        f.push_back(flag("env.normalize_obs", [](auto& c) -> auto& { return c.env.normalize_obs; }));

        f.push_back(Field{"net.hidden",
                          [](RunConfig& c, std::string_view v) {
                              c.td3.hidden.clear();
                              for (double h : to_list(v, 0)) {
                                  if (h < 1 || h != static_cast<double>(static_cast<std::size_t>(h))) {
                                      throw ConfigError("net.hidden widths must be positive integers");
                                  }
                                  c.td3.hidden.push_back(static_cast<std::size_t>(h));
                              }
                          },
                          [](const RunConfig& c) {
                              std::string out;
                              for (std::size_t i = 0; i < c.td3.hidden.size(); ++i) {
                                  if (i) out += ',';
                                  out += std::to_string(c.td3.hidden[i]);
                              }
                              return out;
                          }});
        f.push_back(real("net.actor_output_init", [](auto& c) -> auto& { return c.td3.actor_output_init; }));
        f.push_back(flag("net.glorot_hidden_bias", [](auto& c) -> auto& { return c.td3.glorot_hidden_bias; }));
        f.push_back(Field{"net.optimizer",
                          [](RunConfig& c, std::string_view v) {
                              v = trim(v);
                              if (v == "adam") c.td3.optimizer = netcore::Optimizer::Adam;
                              else if (v == "sgd") c.td3.optimizer = netcore::Optimizer::Sgd;
                              else throw ConfigError("net.optimizer must be adam or sgd");
                          },
                          [](const RunConfig& c) {
                              return std::string(c.td3.optimizer == netcore::Optimizer::Adam ? "adam" : "sgd");
                          }});
        f.push_back(real("net.adam_beta1", [](auto& c) -> auto& { return c.td3.adam_beta1; }));
        f.push_back(real("net.adam_beta2", [](auto& c) -> auto& { return c.td3.adam_beta2; }));
        f.push_back(real("net.adam_eps", [](auto& c) -> auto& { return c.td3.adam_eps; }));

        f.push_back(real("td3.actor_lr", [](auto& c) -> auto& { return c.td3.actor_lr; }));
        f.push_back(real("td3.critic_lr", [](auto& c) -> auto& { return c.td3.critic_lr; }));
        f.push_back(real("td3.polyak", [](auto& c) -> auto& { return c.td3.polyak; }));
        f.push_back(real("td3.target_noise_sigma", [](auto& c) -> auto& { return c.td3.target_noise_sigma; }));
        f.push_back(real("td3.target_noise_clip", [](auto& c) -> auto& { return c.td3.target_noise_clip; }));
        f.push_back(real("td3.gamma", [](auto& c) -> auto& { return c.td3.gamma; }));
        f.push_back(integer<std::size_t>("td3.batch_size", [](auto& c) -> auto& { return c.td3.batch_size; }));
        f.push_back(integer<std::uint64_t>("td3.policy_delay", [](auto& c) -> auto& { return c.td3.policy_delay; }));
        f.push_back(integer<std::size_t>("td3.buffer_capacity", [](auto& c) -> auto& { return c.td3.buffer_capacity; }));
        f.push_back(integer<std::size_t>("td3.learning_starts", [](auto& c) -> auto& { return c.td3.learning_starts; }));
        f.push_back(integer<std::uint64_t>("td3.warmup_steps", [](auto& c) -> auto& { return c.td3.warmup_steps; }));
        f.push_back(real("td3.ou_theta", [](auto& c) -> auto& { return c.td3.ou_theta; }));
        f.push_back(real("td3.ou_sigma", [](auto& c) -> auto& { return c.td3.ou_sigma; }));

        f.push_back(integer<std::uint64_t>("train.total_steps", [](auto& c) -> auto& { return c.total_steps; }));
        f.push_back(integer<std::uint64_t>("train.checkpoint_every", [](auto& c) -> auto& { return c.checkpoint_every; }));
        f.push_back(integer<int>("eval.episodes", [](auto& c) -> auto& { return c.eval_episodes; }));
        f.push_back(array<4>("baseline.kp", [](auto& c) -> auto& { return c.baseline_kp; }));
        f.push_back(array<4>("baseline.kd", [](auto& c) -> auto& { return c.baseline_kd; }));
        return f;
    }();
    return table;
}

const Field& find_field(std::string_view key) {
    for (const Field& f : fields()) {
        if (f.key == key) return f;
    }
    throw ConfigError("unknown config key '" + std::string(key) + "'");
}

}  // namespace

void RunConfig::validate() const {
    env.validate();
    td3.validate();
    if (eval_episodes < 1) throw ConfigError("eval.episodes must be >= 1");
    if (checkpoint_every == 0) throw ConfigError("train.checkpoint_every must be >= 1");
}

void set_config_value(RunConfig& cfg, std::string_view key, std::string_view value) {
    const Field& f = find_field(trim(key));
    try {
        f.set(cfg, trim(value));
    } catch (const ConfigError& e) {
        throw ConfigError(f.key + ": " + e.what());
    }
}

RunConfig parse_config(std::string_view text, RunConfig base) {
    std::set<std::string, std::less<>> seen;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("line " + std::to_string(line_no) + ": expected key=value");
        }
        const std::string key(trim(line.substr(0, eq)));
        if (!seen.insert(key).second) {
            throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
        }
        try {
            set_config_value(base, key, line.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return base;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path, "cannot open config file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string to_text(const RunConfig& cfg) {
    std::string out;
    for (const Field& f : fields()) out += f.key + "=" + f.get(cfg) + "\n";
    return out;
}

std::vector<std::string> config_keys() {
    std::vector<std::string> keys;
    for (const Field& f : fields()) keys.push_back(f.key);
    return keys;
}

std::uint32_t config_hash(const RunConfig& cfg) {
    const std::string text = to_text(cfg);
    return static_cast<std::uint32_t>(
        crc32(0L, reinterpret_cast<const Bytef*>(text.data()), static_cast<uInt>(text.size())));
}

}  // namespace gatepilot
