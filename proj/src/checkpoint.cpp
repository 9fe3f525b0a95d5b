#include "gatepilot/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>

#include <zlib.h>

#include "gatepilot/errors.hpp"

namespace gatepilot {

namespace {

constexpr std::uint8_t kMagic[4] = {'G', 'P', 'C', 'K'};
constexpr std::size_t kHeaderBytes = 5;  // magic + version
constexpr std::size_t kCrcBytes = 4;

std::uint32_t crc_of(std::span<const std::uint8_t> bytes) {
    return static_cast<std::uint32_t>(crc32(0L, bytes.data(), static_cast<uInt>(bytes.size())));
}

class Writer {
public:
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u32(std::uint32_t v) { put(v, 4); }
    void u64(std::uint64_t v) { put(v, 8); }
    void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
    void f64s(const std::vector<double>& v) {
        for (double x : v) f64(x);
    }
    std::vector<std::uint8_t>& bytes() { return out_; }

private:
    void put(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    std::vector<std::uint8_t> out_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
    std::uint64_t u64() { return get(8); }
    double f64() { return std::bit_cast<double>(get(8)); }
    void f64s(std::vector<double>& v) {
        if (remaining() / 8 < v.size()) throw CheckpointError("checkpoint payload shorter than its header declares");
        for (double& x : v) x = f64();
    }
    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    std::uint64_t get(int n) {
        if (remaining() < static_cast<std::size_t>(n)) {
            throw CheckpointError("checkpoint payload shorter than its header declares");
        }
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += n;
        return v;
    }
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

void write_payload(Writer& w, const netcore::MlpParams& p) {
    for (const auto& l : p.layers) {
        w.f64s(l.weights);
        w.f64s(l.biases);
    }
}

void read_payload(Reader& r, netcore::MlpParams& p) {
    for (auto& l : p.layers) {
        r.f64s(l.weights);
        r.f64s(l.biases);
    }
}

}  // namespace

std::string_view to_string(NetworkRole role) {
    switch (role) {
        case NetworkRole::Actor: return "actor";
        case NetworkRole::Critic1: return "critic1";
        case NetworkRole::Critic2: return "critic2";
        case NetworkRole::TargetActor: return "target_actor";
        case NetworkRole::TargetCritic1: return "target_critic1";
        case NetworkRole::TargetCritic2: return "target_critic2";
    }
    return "unknown";
}

bool Checkpoint::has(NetworkRole role) const {
    for (const auto& n : networks) {
        if (n.role == role) return true;
    }
    return false;
}

const StoredNetwork& Checkpoint::network(NetworkRole role) const {
    for (const auto& n : networks) {
        if (n.role == role) return n;
    }
    throw CheckpointError("checkpoint has no " + std::string(to_string(role)) + " network");
}

Checkpoint make_checkpoint(const td3core::TrainerState& st, std::uint32_t config_hash,
                           bool include_optimizer) {
    Checkpoint c;
    c.train_step = st.env_steps;
    c.config_hash = config_hash;
    auto opt = [&](const netcore::AdamState& s) {
        return include_optimizer ? std::optional<netcore::AdamState>(s) : std::nullopt;
    };
    c.networks.push_back({NetworkRole::Actor, st.actor, opt(st.actor_opt)});
    c.networks.push_back({NetworkRole::Critic1, st.critic1, opt(st.critic1_opt)});
    c.networks.push_back({NetworkRole::Critic2, st.critic2, opt(st.critic2_opt)});
    c.networks.push_back({NetworkRole::TargetActor, st.target_actor, std::nullopt});
    c.networks.push_back({NetworkRole::TargetCritic1, st.target_critic1, std::nullopt});
    c.networks.push_back({NetworkRole::TargetCritic2, st.target_critic2, std::nullopt});
    return c;
}

td3core::TrainerState restore_trainer(const Checkpoint& ckpt) {
    td3core::TrainerState st;
    st.actor = ckpt.network(NetworkRole::Actor).params;
    st.critic1 = ckpt.network(NetworkRole::Critic1).params;
    st.critic2 = ckpt.network(NetworkRole::Critic2).params;
    st.target_actor = ckpt.network(NetworkRole::TargetActor).params;
    st.target_critic1 = ckpt.network(NetworkRole::TargetCritic1).params;
    st.target_critic2 = ckpt.network(NetworkRole::TargetCritic2).params;
    auto opt_or_fresh = [&](NetworkRole role, const netcore::MlpParams& p) {
        const auto& stored = ckpt.network(role).optimizer;
        return stored ? *stored : netcore::AdamState::for_params(p);
    };
    st.actor_opt = opt_or_fresh(NetworkRole::Actor, st.actor);
    st.critic1_opt = opt_or_fresh(NetworkRole::Critic1, st.critic1);
    st.critic2_opt = opt_or_fresh(NetworkRole::Critic2, st.critic2);
    st.env_steps = ckpt.train_step;
    return st;
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
    Writer w;
    for (std::uint8_t b : kMagic) w.u8(b);
    w.u8(kCheckpointVersion);
    w.u64(ckpt.train_step);
    w.u32(ckpt.config_hash);
    w.u32(static_cast<std::uint32_t>(ckpt.networks.size()));
    for (const auto& net : ckpt.networks) {
        net.params.validate();
        w.u8(static_cast<std::uint8_t>(net.role));
        w.u32(static_cast<std::uint32_t>(net.params.layers.size()));
        for (const auto& l : net.params.layers) {
            w.u32(static_cast<std::uint32_t>(l.rows));
            w.u32(static_cast<std::uint32_t>(l.cols));
            w.u8(static_cast<std::uint8_t>(l.activation));
        }
        w.u8(net.optimizer ? 1 : 0);
        write_payload(w, net.params);
        if (net.optimizer) {
            netcore::require_same_shape(net.params, net.optimizer->m, "checkpoint optimizer");
            netcore::require_same_shape(net.params, net.optimizer->v, "checkpoint optimizer");
            w.u64(net.optimizer->t);
            w.f64(net.optimizer->beta1);
            w.f64(net.optimizer->beta2);
            w.f64(net.optimizer->eps);
            write_payload(w, net.optimizer->m);
            write_payload(w, net.optimizer->v);
        }
    }
    auto& bytes = w.bytes();
    w.u32(crc_of(std::span(bytes).subspan(kHeaderBytes)));
    return std::move(bytes);
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
    if (bytes.size() >= 4 && std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw BadMagic("not a checkpoint file (bad magic bytes)");
    }
    if (bytes.size() >= kHeaderBytes && bytes[4] != kCheckpointVersion) {
        throw VersionMismatch("checkpoint format version " + std::to_string(bytes[4]) +
                              " is not supported (expected " +
                              std::to_string(kCheckpointVersion) + ")");
    }
    if (bytes.size() < kHeaderBytes + kCrcBytes) {
        throw ChecksumMismatch("checkpoint truncated before its checksum");
    }
    const auto body = bytes.subspan(kHeaderBytes, bytes.size() - kHeaderBytes - kCrcBytes);
    Reader tail(bytes.subspan(bytes.size() - kCrcBytes));
    if (tail.u32() != crc_of(body)) {
        throw ChecksumMismatch("checkpoint checksum mismatch (corrupt or truncated file)");
    }

    Reader r(body);
    Checkpoint c;
    c.train_step = r.u64();
    c.config_hash = r.u32();
    const std::uint32_t count = r.u32();
    for (std::uint32_t n = 0; n < count; ++n) {
        StoredNetwork net;
        const std::uint8_t role = r.u8();
        if (role > static_cast<std::uint8_t>(NetworkRole::TargetCritic2)) {
            throw CheckpointError("unknown network role tag " + std::to_string(role));
        }
        net.role = static_cast<NetworkRole>(role);
        const std::uint32_t layers = r.u32();
        for (std::uint32_t l = 0; l < layers; ++l) {
            const std::uint32_t rows = r.u32();
            const std::uint32_t cols = r.u32();
            const std::uint8_t act = r.u8();
            if (act > static_cast<std::uint8_t>(netcore::Activation::Tanh)) {
                throw CheckpointError("unknown activation tag " + std::to_string(act));
            }
            if (static_cast<std::uint64_t>(rows) * (cols + 1) * 8 > r.remaining()) {
                throw CheckpointError("layer dimensions exceed the payload length");
            }
            net.params.layers.emplace_back(rows, cols, static_cast<netcore::Activation>(act));
        }
        const bool has_opt = r.u8() != 0;
        read_payload(r, net.params);
        try {
            net.params.validate();
        } catch (const ShapeError& e) {
            throw CheckpointError(std::string("inconsistent layer header: ") + e.what());
        }
        if (has_opt) {
            netcore::AdamState s;
            s.t = r.u64();
            s.beta1 = r.f64();
            s.beta2 = r.f64();
            s.eps = r.f64();
            s.m = net.params.zeros_like();
            s.v = net.params.zeros_like();
            read_payload(r, s.m);
            read_payload(r, s.v);
            net.optimizer = std::move(s);
        }
        c.networks.push_back(std::move(net));
    }
    if (r.remaining() != 0) throw CheckpointError("trailing bytes after the declared payload");
    return c;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    const std::vector<std::uint8_t> bytes = encode_checkpoint(ckpt);
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError(tmp, "cannot open for writing");
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw IoError(tmp, "write failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError(path, "cannot move checkpoint into place: " + ec.message());
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path, "cannot open checkpoint");
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                          std::istreambuf_iterator<char>());
    try {
        return decode_checkpoint(bytes);
    } catch (const VersionMismatch& e) {
        throw VersionMismatch(path + ": " + e.what());
    } catch (const BadMagic& e) {
        throw BadMagic(path + ": " + e.what());
    } catch (const ChecksumMismatch& e) {
        throw ChecksumMismatch(path + ": " + e.what());
    } catch (const CheckpointError& e) {
        throw CheckpointError(path + ": " + e.what());
    }
}

}  // namespace gatepilot
