#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "perch/controller.hpp"
#include "perch/dynamics.hpp"
#include "perch/policy.hpp"
#include "perch/rng.hpp"
#include "perch/trajectory.hpp"

namespace perch::msn {

struct MissionConfig {
    Vec3 perch_point = Vec3::Zero();  // wall plane passes through it, normal +x
    Vec3 box_center{2.0, 0.0, 0.0};   // initial-position sampling box
    Vec3 box_size{1.0, 1.0, 1.0};
    Vec3 v0_min{-0.5, -0.5, -0.5};    // initial-velocity bounds, m/s
    Vec3 v0_max{0.5, 0.5, 0.5};
    int trial_count = 50;
    double control_rate_hz = 1000.0;
    double timeout_s = 10.0;  // simulated flight time budget per mission
    std::uint64_t seed = 0;

    void validate() const;
};

/// Success thresholds at wall contact for a full mission (wider than the
/// rollout-extraction tolerance: the tracker adds its own error).
struct MissionTolerance {
    double lateral = 0.10;              // m
    double pitch = 10.0 * kPi / 180.0;  // rad from +90 deg
};

struct MissionStepRecord {
    double t = 0.0;
    int stage = 1;  // 1 generation, 2 tracking, 3 attitude hold
    QuadState state;
    MotorCommand cmd;
    traj::TrajectorySample ref;
    Vec3 a_c = Vec3::Zero();
    double t_c = 0.0;
    Mat3 r_c = Mat3::Identity();
};

/// Contact values linearly interpolated at the exact wall-plane crossing.
struct ContactRecord {
    double t = 0.0;
    double y_offset = 0.0;  // m, relative to the perch point
    double z_offset = 0.0;  // m
    double pitch = 0.0;     // rad
};

struct MissionLog {
    std::vector<MissionStepRecord> steps;
    std::optional<ContactRecord> contact;
    bool success = false;
};

/// Everything a mission needs besides the policy and the initial state.
struct MissionSetup {
    QuadParams params{};
    ctl::Gains gains{};
    ctl::AttitudeSwitchConfig attitude_switch{};
    ctl::StageThreeConfig stage_three{};
    MissionConfig mission{};
    traj::RolloutConfig rollout{};
    MissionTolerance success_tol{};
};

/// Uniform position in the box, uniform velocity in the configured range,
/// identity attitude, zero rates. Deterministic per (config seed, trial
/// seed) pair.
QuadState sample_initial_state(const MissionConfig& cfg, std::uint64_t trial_seed);

/// Full three-stage mission: policy rollout from s0 (Stage I, logged on
/// its own timeline), then closed-loop tracking of the extracted
/// reference from the same s0 with the attitude switch (Stages II-III).
/// Ends at wall contact; throws MissionTimeout if the flight exceeds the
/// configured budget, and propagates SimulationDiverged from the plant.
MissionLog run_mission(const QuadState& s0, const rl::PolicyNet& policy,
                       const MissionSetup& setup);

/// Stages II-III only, tracking a provided reference (oracle mode).
MissionLog run_mission_tracking(const QuadState& s0, const traj::ReferenceTrajectory& ref,
                                const MissionSetup& setup);

struct LandingStats {
    double mean_y_cm = 0.0, sd_y_cm = 0.0;
    double mean_z_cm = 0.0, sd_z_cm = 0.0;
    double mean_pitch_deg = 0.0, sd_pitch_deg = 0.0;
    double success_rate = 0.0;
    int trials = 0;
    int contacts = 0;
    int successes = 0;
};

/// Mean and unbiased (n-1) SD of the contact offsets and pitch, reported
/// in centimeters and degrees.
LandingStats stats_from_contacts(const std::vector<ContactRecord>& contacts, int trials,
                                 int successes);

/// Seeded Monte-Carlo evaluation: trial i samples its initial state from
/// stream i and flies a full mission; trials that diverge or time out
/// count as failures. Statistics cover every trial that touched the wall.
LandingStats monte_carlo(const rl::PolicyNet& policy, const MissionSetup& setup,
                         const std::function<void(int, const MissionLog&)>& on_trial = {});

}  // namespace perch::msn
