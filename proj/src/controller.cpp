#include "perch/controller.hpp"

#include <algorithm>
#include <cmath>

#include "perch/errors.hpp"

namespace perch::ctl {

namespace {
void require_positive(const Vec3& v, const char* name) {
    if (!(v.x() > 0.0 && v.y() > 0.0 && v.z() > 0.0))
        throw ValidationError(std::string("gains: ") + name + " must be positive per axis");
}
}  // namespace

void Gains::validate() const {
    require_positive(kx, "Kx");
    require_positive(kv, "Kv");
    require_positive(kr, "KR");
    require_positive(kp, "Kp");
    require_positive(ki, "Ki");
    if (!(kd.x() >= 0.0 && kd.y() >= 0.0 && kd.z() >= 0.0))
        throw ValidationError("gains: Kd must be non-negative per axis");
}

void AttitudeSwitchConfig::validate() const {
    if (!(epsilon > 0.0)) throw ValidationError("attitude switch: epsilon must be positive");
    if (!is_rotation(perch_attitude))
        throw ValidationError("attitude switch: perch attitude is not a rotation");
}

void StageThreeConfig::validate() const {
    if (!(terminal_thrust >= 0.0))
        throw ValidationError("stage three: terminal thrust must be non-negative");
    if (!(decay_time > 0.0)) throw ValidationError("stage three: decay time must be positive");
}

Vec3 tracking_accel(const Vec3& x_f, const Vec3& v_f, const traj::TrajectorySample& ref,
                    const Gains& k) {
    return k.kx.cwiseProduct(ref.x_ref - x_f) + k.kv.cwiseProduct(ref.v_ref - v_f) + ref.a_ref;
}

ThrustAttitude thrust_and_attitude(const Vec3& a_c, double psi_ref, const QuadParams& p) {
    const Vec3 f = p.mass * (a_c - p.gravity);
    const double t_c = f.norm();
    if (t_c < 1e-9) throw SingularHeading("thrust_and_attitude: zero thrust demand");
    const Vec3 b_zc = f / t_c;

    const Vec3 e_y(-std::sin(psi_ref), std::cos(psi_ref), 0.0);
    const Vec3 cross_x = e_y.cross(b_zc);
    const double nx = cross_x.norm();
    if (nx < 1e-6)
        throw SingularHeading("thrust_and_attitude: heading parallel to thrust axis");
    const Vec3 b_xc = cross_x / nx;
    const Vec3 b_yc = b_zc.cross(b_xc).normalized();

    ThrustAttitude out;
    out.t_c = t_c;
    out.r_c.col(0) = b_xc;
    out.r_c.col(1) = b_yc;
    out.r_c.col(2) = b_zc;
    return out;
}

Mat3 select_attitude(double d_x, const AttitudeSwitchConfig& cfg, const Mat3& r_traj) {
    return d_x >= cfg.epsilon ? r_traj : cfg.perch_attitude;
}

Vec3 attitude_outer(const Mat3& r_c, const Mat3& r_f, const Vec3& omega_ref, const Gains& k) {
    return k.kr.cwiseProduct(rotation_error(r_c, r_f)) + omega_ref;
}

std::pair<Vec3, RateLoopState> attitude_inner(const Vec3& omega_c, const Vec3& omega_f,
                                              const Mat3& r_c, const Mat3& r_f,
                                              RateLoopState state, const Gains& k, double dt) {
    if (!(dt > 0.0)) throw ValidationError("attitude_inner: dt must be positive");

    // Rate command expressed in the feedback body frame before comparison.
    const Vec3 e = -omega_f + r_f.transpose() * r_c * omega_c;

    Vec3 e_dot = Vec3::Zero();
    if (state.has_prev) {
        state.integral += 0.5 * dt * (e + state.prev_error);
        e_dot = (e - state.prev_error) / dt;
    } else {
        state.integral += dt * e;
    }
    state.integral = state.integral.cwiseMax(-state.integral_bound)
                         .cwiseMin(state.integral_bound);
    state.prev_error = e;
    state.has_prev = true;

    const Vec3 cmd = k.kp.cwiseProduct(e) + k.ki.cwiseProduct(state.integral) +
                     k.kd.cwiseProduct(e_dot);
    return {cmd, state};
}

MixResult allocate(double t_c, const Vec3& omega_dot_c, const QuadState& s,
                   const QuadParams& p) {
    if (!(t_c >= 0.0)) throw ValidationError("allocate: thrust must be non-negative");
    GeneralizedForce f;
    f.tau = p.inertia * omega_dot_c + s.omega.cross(p.inertia * s.omega);
    f.tz = t_c;
    return mix_inverse(f, p);
}

TrackingCascade::TrackingCascade(QuadParams p, Gains g, AttitudeSwitchConfig sw,
                                 StageThreeConfig s3, double dt, Vec3 perch_point)
    : p_(std::move(p)), g_(g), sw_(sw), s3_(s3), dt_(dt),
      perch_point_(std::move(perch_point)) {
    p_.validate();
    g_.validate();
    sw_.validate();
    s3_.validate();
    if (!(dt_ > 0.0)) throw ValidationError("cascade: dt must be positive");
    latch_thrust_ = p_.hover_thrust();
}

TrackingCascade::Output TrackingCascade::control(const QuadState& s,
                                                 const traj::TrajectorySample& ref) {
    Output out;

    const double d_x = std::abs(s.x.x() - perch_point_.x());
    if (!switched_ && d_x < sw_.epsilon) {
        switched_ = true;  // monotone latch: once in the perch stage, stay
        frozen_ref_ = ref;
        since_switch_ = 0.0;
    }

    const traj::TrajectorySample& active = switched_ ? frozen_ref_ : ref;
    out.a_c = tracking_accel(s.x, s.v, active, g_);

    Vec3 omega_ref;
    if (!switched_) {
        const ThrustAttitude ta = thrust_and_attitude(out.a_c, active.psi_ref, p_);
        out.t_c = ta.t_c;
        out.r_c = select_attitude(d_x, sw_, ta.r_c);
        omega_ref = active.omega_ref;
        latch_thrust_ = ta.t_c;
        out.stage = 2;
    } else {
        const double frac = std::min(since_switch_ / s3_.decay_time, 1.0);
        out.t_c = latch_thrust_ + frac * (s3_.terminal_thrust - latch_thrust_);
        out.r_c = sw_.perch_attitude;
        omega_ref = Vec3::Zero();
        since_switch_ += dt_;
        out.stage = 3;
    }

    const Vec3 omega_c = attitude_outer(out.r_c, s.r, omega_ref, g_);
    auto [omega_dot_c, next_state] = attitude_inner(omega_c, s.omega, out.r_c, s.r,
                                                    rate_state_, g_, dt_);
    rate_state_ = next_state;

    const MixResult mix = allocate(out.t_c, omega_dot_c, s, p_);
    out.cmd = mix.cmd;
    out.saturated = mix.saturated;
    return out;
}

}  // namespace perch::ctl
