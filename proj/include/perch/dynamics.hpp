#pragma once

#include <Eigen/Dense>

#include "perch/so3.hpp"

namespace perch {

/// Physical constants of the vehicle. Inertial frame is z-up with
/// gravity pointing down; collective thrust acts along +body-z.
struct QuadParams {
    double mass = 1.0;                                   // kg
    Mat3 inertia = Vec3(0.01, 0.01, 0.02).asDiagonal();  // kg m^2, diagonal
    double arm_length = 0.17;                            // m
    double k_f = 8e-6;                                   // N s^2 / rad^2
    double k_m = 1e-7;                                   // N m s^2 / rad^2
    Vec3 gravity{0.0, 0.0, -9.81};                       // m/s^2
    double thrust_min = 0.0;                             // N, per motor
    double thrust_max = 6.0;                             // N, per motor

    /// Throws ValidationError naming the violated invariant.
    void validate() const;

    double hover_thrust() const { return mass * gravity.norm(); }
};

/// Rigid-body state. r maps body coordinates to inertial coordinates.
struct QuadState {
    Mat3 r = Mat3::Identity();
    Vec3 omega = Vec3::Zero();  // body angular velocity, rad/s
    Vec3 x = Vec3::Zero();      // inertial position, m
    Vec3 v = Vec3::Zero();      // inertial velocity, m/s

    /// Finite entries, ||v|| < 100, ||omega|| < 200. Violations mean the
    /// simulation blew up.
    bool within_sanity_bounds() const;
};

/// Per-motor thrusts in Newtons.
struct MotorCommand {
    Eigen::Vector4d thrust = Eigen::Vector4d::Zero();

    MotorCommand() = default;
    MotorCommand(double t1, double t2, double t3, double t4) : thrust(t1, t2, t3, t4) {}
    explicit MotorCommand(const Eigen::Vector4d& t) : thrust(t) {}

    MotorCommand clamped(const QuadParams& p) const;
    bool within_bounds(const QuadParams& p, double tol = 1e-12) const;
};

/// Body torque plus collective thrust magnitude along +body-z.
struct GeneralizedForce {
    Vec3 tau = Vec3::Zero();  // N m
    double tz = 0.0;          // N, >= 0 for in-bounds motor commands
};

struct QuadStateDerivative {
    Mat3 r_dot;
    Vec3 omega_dot;
    Vec3 x_dot;
    Vec3 v_dot;
};

/// Motor thrusts to generalized force, X configuration:
///   tau_x = (l/sqrt2) (-T1 + T2 + T3 - T4)
///   tau_y = (l/sqrt2) ( T1 - T2 + T3 - T4)
///   tau_z = (kM/kF)   ( T1 + T2 - T3 - T4)
///   tz    =             T1 + T2 + T3 + T4
GeneralizedForce mix_forward(const MotorCommand& cmd, const QuadParams& p);

struct MixResult {
    MotorCommand cmd;
    bool saturated = false;
};

/// Exact inverse of mix_forward with the result clamped to the motor
/// thrust bounds. Saturation is flagged, not fatal.
MixResult mix_inverse(const GeneralizedForce& f, const QuadParams& p);

/// Continuous rigid-body dynamics:
///   Rdot = R hat(Omega)
///   Omegadot = J^-1 (tau - Omega x J Omega)
///   xdot = v
///   vdot = (1/m) R [0 0 tz]^T + g
QuadStateDerivative state_derivative(const QuadState& s, const GeneralizedForce& f,
                                     const QuadParams& p);

/// Explicit Euler step of all state blocks followed by rotation
/// re-orthonormalization. The command is clamped to the motor bounds
/// first. Deterministic; throws SimulationDiverged if the post-step
/// state violates the sanity bounds. Requires 0 < dt <= 0.01.
QuadState step(const QuadState& s, const MotorCommand& cmd, double dt, const QuadParams& p);

/// Rotor speed equivalent of a thrust command, omega_i = sqrt(T_i / kF).
Eigen::Vector4d rotor_speeds(const MotorCommand& cmd, const QuadParams& p);

}  // namespace perch
