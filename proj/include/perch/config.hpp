#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "perch/controller.hpp"
#include "perch/mission.hpp"
#include "perch/trainer.hpp"

namespace perch::io {

/// Every tunable in one place, loaded from a single JSON file. Omitted
/// fields keep their documented defaults; unknown keys are rejected so a
/// typo cannot silently fall back to a default.
struct ToolkitConfig {
    QuadParams quad{};
    rl::TrainConfig train{};
    ctl::Gains gains{};
    ctl::AttitudeSwitchConfig attitude_switch{};
    ctl::StageThreeConfig stage_three{};
    msn::MissionConfig mission{};
    traj::RolloutConfig rollout{};
    msn::MissionTolerance success_tol{};
    std::string output_dir = "out";
    std::uint64_t seed = 0;

    // Angles are configured in degrees; these hold the configured values
    // verbatim (the radian fields above are derived) so serialization
    // echoes the input bit-for-bit.
    double perch_pitch_deg = 90.0;
    double rollout_tol_pitch_deg = 5.0;
    double success_pitch_deg = 10.0;

    void validate() const;

    /// Pushes the top-level seed into every nested consumer so all
    /// randomness descends from one value.
    void propagate_seed();
};

/// Empty or absent-field files yield defaults; malformed JSON or unknown
/// keys raise ParseError, violated invariants raise ValidationError.
ToolkitConfig load_config(const std::filesystem::path& path);

/// Parses config text (same semantics as load_config; origin names the
/// source in error messages).
ToolkitConfig parse_config(const std::string& text, const std::string& origin);

/// Canonical JSON serialization; load(serialize(c)) == c.
std::string serialize_config(const ToolkitConfig& c);

}  // namespace perch::io
