#pragma once

// Flat `namespace.key=value` run configuration. Missing keys keep their
// defaults, unknown keys are rejected, and the resolved configuration can be
// written back out verbatim so every run directory is self-describing.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "gatepilot/gateworld.hpp"
#include "gatepilot/td3core.hpp"

namespace gatepilot {

struct RunConfig {
    std::uint64_t seed = 0;
    gateworld::EnvConfig env;
    td3core::Td3Config td3;
    std::uint64_t total_steps = 2'500'000;
    std::uint64_t checkpoint_every = 100'000;
    int eval_episodes = 10;
    Vec4 baseline_kp{0.8, 0.8, 0.8, 0.8};
    Vec4 baseline_kd{0.2, 0.2, 0.2, 0.2};

    void validate() const;
};

/// Applies `key=value` lines on top of `base`. Blank lines and `#` comments are ignored.
/// Throws ConfigError naming the line for unknown keys, duplicates or bad values.
RunConfig parse_config(std::string_view text, RunConfig base = {});

/// Reads and parses a config file; throws IoError if it cannot be read.
RunConfig load_config(const std::string& path);

/// Sets one key; the same rules as a config line.
void set_config_value(RunConfig& cfg, std::string_view key, std::string_view value);

/// Every key, one per line, in a fixed order. parse_config(to_text(c)) reproduces c exactly.
std::string to_text(const RunConfig& cfg);

std::vector<std::string> config_keys();

/// CRC-32 of the resolved text; stamped into checkpoints.
std::uint32_t config_hash(const RunConfig& cfg);

}  // namespace gatepilot
