#include "perch/dynamics.hpp"

#include <cmath>

#include "perch/errors.hpp"

namespace perch {

void QuadParams::validate() const {
    if (!(mass > 0.0)) {
        throw ValidationError("QuadParams: mass must be > 0");
    }
    if ((inertia - inertia.transpose()).norm() > 1e-12) {
        throw ValidationError("QuadParams: inertia must be symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Mat3> eig(inertia);
    if (eig.eigenvalues().minCoeff() <= 0.0) {
        throw ValidationError("QuadParams: inertia must be positive definite");
    }
    if (!(arm_length > 0.0)) {
        throw ValidationError("QuadParams: arm_length must be > 0");
    }
    if (!(k_f > 0.0)) {
        throw ValidationError("QuadParams: k_f must be > 0");
    }
    if (!(k_m > 0.0)) {
        throw ValidationError("QuadParams: k_m must be > 0");
    }
    if (!gravity.allFinite()) {
        throw ValidationError("QuadParams: gravity must be finite");
    }
    if (!(thrust_min >= 0.0) || !(thrust_min < thrust_max)) {
        throw ValidationError("QuadParams: need 0 <= thrust_min < thrust_max");
    }
}

bool QuadState::within_sanity_bounds() const {
    return r.allFinite() && omega.allFinite() && x.allFinite() && v.allFinite() &&
           v.norm() < 100.0 && omega.norm() < 200.0;
}

MotorCommand MotorCommand::clamped(const QuadParams& p) const {
    return MotorCommand(thrust.cwiseMax(p.thrust_min).cwiseMin(p.thrust_max));
}

bool MotorCommand::within_bounds(const QuadParams& p, double tol) const {
    return (thrust.array() >= p.thrust_min - tol).all() &&
           (thrust.array() <= p.thrust_max + tol).all();
}

GeneralizedForce mix_forward(const MotorCommand& cmd, const QuadParams& p) {
    const double a = p.arm_length / std::sqrt(2.0);
    const double b = p.k_m / p.k_f;
    const auto& t = cmd.thrust;
    GeneralizedForce f;
    f.tau.x() = a * (-t(0) + t(1) + t(2) - t(3));
    f.tau.y() = a * (t(0) - t(1) + t(2) - t(3));
    f.tau.z() = b * (t(0) + t(1) - t(2) - t(3));
    f.tz = t.sum();
    return f;
}

MixResult mix_inverse(const GeneralizedForce& f, const QuadParams& p) {
    const double a = p.arm_length / std::sqrt(2.0);
    const double b = p.k_m / p.k_f;
    // The mixing matrix rows are mutually orthogonal with squared norm 4,
    // so the inverse is the transpose of the sign pattern over 4.
    const double u = f.tau.x() / a;
    const double v = f.tau.y() / a;
    const double w = f.tau.z() / b;
    const double s = f.tz;
    MotorCommand cmd((-u + v + w + s) / 4.0, (u - v + w + s) / 4.0,
                     (u + v - w + s) / 4.0, (-u - v - w + s) / 4.0);
    MixResult out;
    out.saturated = !cmd.within_bounds(p);
    out.cmd = cmd.clamped(p);
    return out;
}

QuadStateDerivative state_derivative(const QuadState& s, const GeneralizedForce& f,
                                     const QuadParams& p) {
    QuadStateDerivative d;
    d.r_dot = s.r * hat(s.omega);
    d.omega_dot = p.inertia.inverse() * (f.tau - s.omega.cross(p.inertia * s.omega));
    d.x_dot = s.v;
    d.v_dot = (1.0 / p.mass) * (s.r * Vec3(0.0, 0.0, f.tz)) + p.gravity;
    return d;
}

QuadState step(const QuadState& s, const MotorCommand& cmd, double dt, const QuadParams& p) {
    if (!(dt > 0.0) || dt > 0.01) {
        throw ValidationError("step: dt must be in (0, 0.01]");
    }
    const GeneralizedForce f = mix_forward(cmd.clamped(p), p);
    const QuadStateDerivative d = state_derivative(s, f, p);
    QuadState next;
    next.r = orthonormalize(s.r + dt * d.r_dot);
    next.omega = s.omega + dt * d.omega_dot;
    next.x = s.x + dt * d.x_dot;
    next.v = s.v + dt * d.v_dot;
    if (!next.within_sanity_bounds()) {
        throw SimulationDiverged("step: state left sanity bounds");
    }
    return next;
}

Eigen::Vector4d rotor_speeds(const MotorCommand& cmd, const QuadParams& p) {
    return (cmd.thrust.cwiseMax(0.0) / p.k_f).cwiseSqrt();
}

}  // namespace perch
