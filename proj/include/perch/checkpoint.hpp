#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "perch/mlp.hpp"
#include "perch/policy.hpp"

namespace perch::io {

/// Self-describing binary container for a trained policy/value pair:
/// magic bytes, format version, architecture block, then little-endian
/// 64-bit float parameter arrays. Roundtrips are bit-exact.
struct Checkpoint {
    static constexpr std::uint32_t kVersion = 1;

    rl::MlpSpec policy_spec;
    rl::ActionScale scale;
    std::vector<double> policy_params;
    rl::MlpSpec value_spec;
    std::vector<double> value_params;

    // Training metadata.
    std::uint64_t seed = 0;
    std::uint32_t iteration = 0;
    std::uint64_t config_hash = 0;
};

Checkpoint make_checkpoint(const rl::PolicyNet& policy, const rl::MlpNet& value,
                           std::uint64_t seed, std::uint32_t iteration,
                           std::uint64_t config_hash);

rl::PolicyNet policy_from(const Checkpoint& c);
rl::MlpNet value_from(const Checkpoint& c);

/// Atomic write; the file is either complete or absent.
void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path);

/// Throws IoError on missing/truncated/corrupt files, VersionMismatch on
/// an unrecognized format version, ShapeMismatch when parameter counts
/// disagree with the architecture block.
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Human-readable JSON summary (architecture, metadata, parameter
/// statistics) for inspection; not a serialization format.
std::string checkpoint_summary_json(const Checkpoint& c);

/// FNV-1a hash used to stamp checkpoints with the config they came from.
std::uint64_t fnv1a(const std::string& s);

}  // namespace perch::io
