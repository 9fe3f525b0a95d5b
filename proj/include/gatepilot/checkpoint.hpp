#pragma once

// Versioned binary checkpoints. All integers and floats are little-endian.
//
//   "GPCK"                    magic, 4 bytes
//   u8   version              kCheckpointVersion
//   u64  train_step
//   u32  config_hash
//   u32  network_count
//   per network:
//     u8   role
//     u32  layer_count
//     per layer: u32 rows, u32 cols, u8 activation
//     u8   has_optimizer
//     f64  payload            per layer: weights row-major, then biases
//     if has_optimizer:
//       u64 adam_t, f64 beta1, f64 beta2, f64 eps, then first and second moments
//       in the payload layout
//   u32  crc32                over every byte after the version byte

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gatepilot/netcore.hpp"
#include "gatepilot/td3core.hpp"

namespace gatepilot {

inline constexpr std::uint8_t kCheckpointVersion = 1;

enum class NetworkRole : std::uint8_t {
    Actor = 0,
    Critic1 = 1,
    Critic2 = 2,
    TargetActor = 3,
    TargetCritic1 = 4,
    TargetCritic2 = 5,
};

std::string_view to_string(NetworkRole role);

struct StoredNetwork {
    NetworkRole role = NetworkRole::Actor;
    netcore::MlpParams params;
    std::optional<netcore::AdamState> optimizer;
};

struct Checkpoint {
    std::uint64_t train_step = 0;
    std::uint32_t config_hash = 0;
    std::vector<StoredNetwork> networks;

    /// Throws CheckpointError when the role is absent.
    const StoredNetwork& network(NetworkRole role) const;
    bool has(NetworkRole role) const;
};

Checkpoint make_checkpoint(const td3core::TrainerState& state, std::uint32_t config_hash,
                           bool include_optimizer = true);

/// Rebuilds trainer state; requires all six networks.
td3core::TrainerState restore_trainer(const Checkpoint& ckpt);

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
/// Throws BadMagic, VersionMismatch, ChecksumMismatch, or CheckpointError for malformed layouts.
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace gatepilot
