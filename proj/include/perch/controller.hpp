#pragma once

#include <utility>

#include "perch/dynamics.hpp"
#include "perch/so3.hpp"
#include "perch/trajectory.hpp"

namespace perch::ctl {

/// Diagonal gains for the position PD, attitude P, and rate PID loops.
struct Gains {
    Vec3 kx{6.0, 6.0, 6.0};
    Vec3 kv{4.0, 4.0, 4.0};
    Vec3 kr{8.0, 8.0, 8.0};
    Vec3 kp{20.0, 20.0, 20.0};
    Vec3 ki{2.0, 2.0, 2.0};
    Vec3 kd{0.2, 0.2, 0.2};

    void validate() const;
};

/// Rate-loop PID memory. The integral accumulator is clamped
/// componentwise to +/- integral_bound.
struct RateLoopState {
    Vec3 integral = Vec3::Zero();
    Vec3 prev_error = Vec3::Zero();
    bool has_prev = false;
    double integral_bound = 10.0;
};

struct AttitudeSwitchConfig {
    double epsilon = 0.5;                  // m, wall-distance threshold
    Mat3 perch_attitude = rot_y(kHalfPi);  // pitch 90 deg toward the wall

    void validate() const;
};

/// Desired acceleration from the position PD plus reference feed-forward.
Vec3 tracking_accel(const Vec3& x_f, const Vec3& v_f, const traj::TrajectorySample& ref,
                    const Gains& k);

struct ThrustAttitude {
    double t_c = 0.0;  // N, collective
    Mat3 r_c = Mat3::Identity();
};

/// Thrust magnitude and desired attitude from a commanded acceleration
/// and reference heading. The thrust vector is f = m (a_c - g); its
/// direction becomes body z, and the heading vector pins body x.
/// Throws SingularHeading when the heading vector is (numerically)
/// parallel to the thrust direction.
ThrustAttitude thrust_and_attitude(const Vec3& a_c, double psi_ref, const QuadParams& p);

/// Wall-distance attitude switch: the trajectory attitude while far
/// (d_x >= epsilon, boundary included), the perch attitude when close.
/// Pure; latching across time is the cascade's job.
Mat3 select_attitude(double d_x, const AttitudeSwitchConfig& cfg, const Mat3& r_traj);

/// Outer attitude loop: proportional action on the rotation error plus
/// the trajectory's angular-velocity feed-forward.
Vec3 attitude_outer(const Mat3& r_c, const Mat3& r_f, const Vec3& omega_ref, const Gains& k);

/// Inner rate loop: PID on e_omega = -omega_f + Rf^T Rc omega_c with a
/// trapezoidal (clamped) integral and backward-difference derivative.
/// Returns the angular-acceleration command and the updated memory.
std::pair<Vec3, RateLoopState> attitude_inner(const Vec3& omega_c, const Vec3& omega_f,
                                              const Mat3& r_c, const Mat3& r_f,
                                              RateLoopState state, const Gains& k, double dt);

/// Torque from the commanded angular acceleration (inertia feed-forward
/// plus gyroscopic term), then motor allocation. Saturation is flagged.
MixResult allocate(double t_c, const Vec3& omega_dot_c, const QuadState& s,
                   const QuadParams& p);

/// Stage III thrust schedule: once the switch latches, thrust decays
/// linearly from the latch-time command to terminal_thrust over
/// decay_time while position references are frozen.
struct StageThreeConfig {
    double terminal_thrust = 1.6;  // N
    double decay_time = 0.3;       // s

    void validate() const;
};

/// Full Stage II/III cascade: position PD -> thrust/attitude -> switch
/// (with monotone latch) -> attitude P -> rate PID -> allocation.
class TrackingCascade {
  public:
    TrackingCascade(QuadParams p, Gains g, AttitudeSwitchConfig sw, StageThreeConfig s3,
                    double dt, Vec3 perch_point = Vec3::Zero());

    struct Output {
        MotorCommand cmd;
        Vec3 a_c = Vec3::Zero();
        double t_c = 0.0;
        Mat3 r_c = Mat3::Identity();
        bool saturated = false;
        int stage = 2;  // 2 while tracking, 3 after the attitude switch
    };

    Output control(const QuadState& s, const traj::TrajectorySample& ref);

    bool switched() const { return switched_; }

  private:
    QuadParams p_;
    Gains g_;
    AttitudeSwitchConfig sw_;
    StageThreeConfig s3_;
    double dt_;
    Vec3 perch_point_;
    RateLoopState rate_state_;
    bool switched_ = false;
    double latch_thrust_ = 0.0;
    double since_switch_ = 0.0;
    traj::TrajectorySample frozen_ref_{};
};

}  // namespace perch::ctl
