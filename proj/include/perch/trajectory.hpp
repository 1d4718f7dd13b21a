#pragma once

#include <vector>

#include "perch/dynamics.hpp"
#include "perch/policy.hpp"
#include "perch/so3.hpp"

namespace perch::traj {

struct TrajectorySample {
    double t = 0.0;
    Vec3 x_ref = Vec3::Zero();
    Vec3 v_ref = Vec3::Zero();
    Vec3 a_ref = Vec3::Zero();
    Vec3 jerk_ref = Vec3::Zero();
    double psi_ref = 0.0;
    Vec3 omega_ref = Vec3::Zero();
};

struct ReferenceTrajectory {
    double dt_ref = 1e-3;
    std::vector<TrajectorySample> samples;
    Vec3 perch_point = Vec3::Zero();
    bool success = false;
};

/// Tolerances defining a successful perch pose at the wall.
struct PerchTolerance {
    double plane = 0.02;               // m, distance to the wall plane
    double lateral = 0.05;             // m, (y,z) offset norm
    double pitch = 5.0 * kPi / 180.0;  // rad, deviation from +90 deg
};

struct RolloutConfig {
    double dt = 1e-3;
    int step_cap = 3000;
    Vec3 perch_point = Vec3::Zero();
    PerchTolerance tol{};
};

struct RolloutResult {
    std::vector<QuadState> states;  // includes the initial state
    std::vector<MotorCommand> actions;
    bool success = false;
};

/// Deterministic policy rollout (mean actions) until wall contact or the
/// step cap. Throws PolicyDiverged if the state leaves the sanity
/// envelope mid-flight.
RolloutResult rollout(const rl::PolicyNet& policy, const QuadState& s0, const QuadParams& p,
                      const RolloutConfig& cfg);

/// True iff the state is on the wall plane within tol.plane, laterally
/// within tol.lateral of the perch point, and pitched within tol.pitch
/// of +90 degrees.
bool check_perch_success(const QuadState& final_state, const Vec3& perch_point,
                         const PerchTolerance& tol);

/// Turns a simulated state/action history into a tracker-ready reference:
/// positions and velocities copied, accelerations from the dynamics model
/// (exact under the simulator), jerk by central differences, yaw from the
/// attitude, and the angular-velocity feed-forward from differential
/// flatness (see omega_ref notes in the implementation).
ReferenceTrajectory derive_references(const std::vector<QuadState>& states,
                                      const std::vector<MotorCommand>& actions,
                                      const QuadParams& p, double dt, const Vec3& perch_point,
                                      bool success);

/// Hand-designed feasible perch path: a lofted quintic cruise that arcs
/// over and crosses the handoff point at the apex (zero vertical speed),
/// followed by a short ballistic braking tail to the wall. The tail is
/// sized to the attitude-switch radius on purpose: the tracker never
/// follows a sustained free-fall stretch (where the thrust demand is
/// too small for position feedback to stay well conditioned), the final
/// pitch-up is left to the attitude hold after the switch, and the
/// handoff height is exactly the ballistic drop of the tail so the
/// open-loop crossing lands on the perch point.
struct AnalyticPerchConfig {
    double dt = 1e-3;
    Vec3 perch_point = Vec3::Zero();
    double cruise_duration = 0.0;  // s; 0 = scale with distance
    double tail_length = 0.55;     // m, ballistic braking run to the wall
    double contact_vx = -1.6;      // m/s at the wall
    double handoff_vx = -3.2;      // m/s entering the tail (arc apex)
    double handoff_lift = 1.5;     // m/s^2 upward thrust still held at handoff
    double apex_margin = -0.08;    // m extra handoff height (may be negative);
                                   // absorbs the gap between the plan's constant
                                   // braking and the thrust flown after the switch
    double gravity = 9.81;         // m/s^2, must match the plant
};

ReferenceTrajectory make_analytic_perch_trajectory(const QuadState& s0,
                                                   const AnalyticPerchConfig& cfg);

}  // namespace perch::traj
