#include "perch/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "perch/errors.hpp"

namespace perch::traj {

namespace {

double wrap_angle(double a) { return a - 2.0 * kPi * std::round(a / (2.0 * kPi)); }

/// Right-handed frame whose z axis carries the mass-normalized thrust
/// f = a - g, with body x pinned by the heading vector. Used for the
/// flatness feed-forward; mass cancels out of the angular-velocity
/// projections, so only ||f|| is needed alongside the axes.
struct FlatFrame {
    Vec3 b_x, b_y, b_z;
    double f_norm;
};

FlatFrame flat_frame(const Vec3& a, double psi, const Vec3& gravity) {
    const Vec3 f = a - gravity;
    FlatFrame fr;
    fr.f_norm = f.norm();
    if (fr.f_norm < 1e-9)
        throw ValidationError("flat frame: acceleration demand is free fall (zero thrust)");
    fr.b_z = f / fr.f_norm;
    const Vec3 e_y(-std::sin(psi), std::cos(psi), 0.0);
    const Vec3 cx = e_y.cross(fr.b_z);
    const double n = cx.norm();
    if (n < 1e-6) throw ValidationError("flat frame: heading parallel to thrust axis");
    fr.b_x = cx / n;
    fr.b_y = fr.b_z.cross(fr.b_x).normalized();
    return fr;
}

/// Quintic with endpoint position/velocity/acceleration constraints.
struct Quintic {
    double c[6];

    Quintic(double p0, double v0, double a0, double pf, double vf, double af, double tf) {
        c[0] = p0;
        c[1] = v0;
        c[2] = 0.5 * a0;
        const double t2 = tf * tf, t3 = t2 * tf, t4 = t3 * tf, t5 = t4 * tf;
        Eigen::Matrix3d m;
        m << t3, t4, t5, 3 * t2, 4 * t3, 5 * t4, 6 * tf, 12 * t2, 20 * t3;
        const Eigen::Vector3d rhs(pf - p0 - v0 * tf - 0.5 * a0 * t2,
                                  vf - v0 - a0 * tf, af - a0);
        const Eigen::Vector3d hi = m.fullPivLu().solve(rhs);
        c[3] = hi(0);
        c[4] = hi(1);
        c[5] = hi(2);
    }

    double pos(double t) const {
        return c[0] + t * (c[1] + t * (c[2] + t * (c[3] + t * (c[4] + t * c[5]))));
    }
    double vel(double t) const {
        return c[1] + t * (2 * c[2] + t * (3 * c[3] + t * (4 * c[4] + t * 5 * c[5])));
    }
    double acc(double t) const {
        return 2 * c[2] + t * (6 * c[3] + t * (12 * c[4] + t * 20 * c[5]));
    }
    double jrk(double t) const { return 6 * c[3] + t * (24 * c[4] + t * 60 * c[5]); }
};

}  // namespace

RolloutResult rollout(const rl::PolicyNet& policy, const QuadState& s0, const QuadParams& p,
                      const RolloutConfig& cfg) {
    p.validate();
    if (!(cfg.dt > 0.0)) throw ValidationError("rollout: dt must be positive");
    if (cfg.step_cap < 1) throw ValidationError("rollout: step cap must be >= 1");
    if (!s0.within_sanity_bounds() || !is_rotation(s0.r))
        throw ValidationError("rollout: invalid initial state");

    RolloutResult out;
    out.states.push_back(s0);
    bool contact = false;
    for (int k = 0; k < cfg.step_cap; ++k) {
        const rl::Observation obs = rl::observe(out.states.back(), cfg.perch_point);
        const MotorCommand cmd = rl::policy_mean(policy, obs);
        QuadState next;
        try {
            next = step(out.states.back(), cmd, cfg.dt, p);
        } catch (const SimulationDiverged& e) {
            throw PolicyDiverged(std::string("rollout: ") + e.what());
        }
        out.states.push_back(next);
        out.actions.push_back(cmd);
        if (next.x.x() - cfg.perch_point.x() <= 0.0) {
            contact = true;
            break;
        }
    }
    out.success = contact && check_perch_success(out.states.back(), cfg.perch_point, cfg.tol);
    return out;
}

bool check_perch_success(const QuadState& final_state, const Vec3& perch_point,
                         const PerchTolerance& tol) {
    const Vec3 d = final_state.x - perch_point;
    if (std::abs(d.x()) > tol.plane) return false;
    if (std::hypot(d.y(), d.z()) > tol.lateral) return false;
    return std::abs(pitch_of(final_state.r) - kHalfPi) <= tol.pitch;
}

ReferenceTrajectory derive_references(const std::vector<QuadState>& states,
                                      const std::vector<MotorCommand>& actions,
                                      const QuadParams& p, double dt, const Vec3& perch_point,
                                      bool success) {
    const int n = static_cast<int>(states.size());
    if (n < 4) throw TooShort("derive_references: need at least 4 states");
    if (static_cast<int>(actions.size()) != n - 1)
        throw ShapeMismatch("derive_references: need exactly one action per step");
    if (!(dt > 0.0)) throw ValidationError("derive_references: dt must be positive");
    p.validate();

    // Accelerations from the dynamics model. The final state has no action
    // of its own (the rollout ends mid-command at contact), so its
    // acceleration is extrapolated quadratically; duplicating the previous
    // sample instead would flatten the finite-difference jerk at the tail.
    std::vector<Vec3> acc(n);
    std::vector<double> thrust(n);
    for (int k = 0; k < n - 1; ++k) {
        const GeneralizedForce f = mix_forward(actions[k].clamped(p), p);
        acc[k] = state_derivative(states[k], f, p).v_dot;
        thrust[k] = f.tz;
    }
    acc[n - 1] = 3.0 * acc[n - 2] - 3.0 * acc[n - 3] + acc[n - 4];
    thrust[n - 1] = thrust[n - 2];

    ReferenceTrajectory out;
    out.dt_ref = dt;
    out.perch_point = perch_point;
    out.success = success;
    out.samples.resize(n);

    for (int k = 0; k < n; ++k) {
        TrajectorySample& s = out.samples[k];
        s.t = k * dt;
        s.x_ref = states[k].x;
        s.v_ref = states[k].v;
        s.a_ref = acc[k];
        if (k == 0)
            s.jerk_ref = (acc[1] - acc[0]) / dt;
        else if (k == n - 1)
            s.jerk_ref = (acc[n - 1] - acc[n - 2]) / dt;
        else
            s.jerk_ref = (acc[k + 1] - acc[k - 1]) / (2.0 * dt);
        s.psi_ref = std::atan2(states[k].r(1, 0), states[k].r(0, 0));
    }

    // Angular-velocity feed-forward by differential flatness. Thrust acts
    // along body z, so m*jerk = Tdot*b_z + T*(omega x b_z) in the body
    // frame; projecting onto b_x and b_y isolates the tilt rates:
    //   omega_x = -m (jerk . b_y) / T,  omega_y = m (jerk . b_x) / T.
    // The yaw component follows the heading rate projected on body z.
    const double t_floor = 0.01 * p.hover_thrust();
    for (int k = 0; k < n; ++k) {
        TrajectorySample& s = out.samples[k];
        const Vec3 b_x = states[k].r.col(0);
        const Vec3 b_y = states[k].r.col(1);
        const Vec3 b_z = states[k].r.col(2);
        const double t_eff = std::max(thrust[k], t_floor);
        s.omega_ref.x() = -p.mass * s.jerk_ref.dot(b_y) / t_eff;
        s.omega_ref.y() = p.mass * s.jerk_ref.dot(b_x) / t_eff;

        double psi_dot;
        if (k == 0)
            psi_dot = wrap_angle(out.samples[1].psi_ref - out.samples[0].psi_ref) / dt;
        else if (k == n - 1)
            psi_dot = wrap_angle(out.samples[n - 1].psi_ref - out.samples[n - 2].psi_ref) / dt;
        else
            psi_dot = wrap_angle(out.samples[k + 1].psi_ref - out.samples[k - 1].psi_ref) /
                      (2.0 * dt);
        // Body-z rate from the heading constraint b_x ~ e_y(psi) x b_z:
        // tilting b_z swings the frame about body z even at fixed heading,
        // and the heading rate adds its own projection. Falls back to the
        // yaw-dominant approximation when the attitude is rolled so far
        // that the constraint geometry degenerates.
        const Vec3 e_y_h(-std::sin(s.psi_ref), std::cos(s.psi_ref), 0.0);
        const Vec3 e_x_h(std::cos(s.psi_ref), std::sin(s.psi_ref), 0.0);
        const double denom = e_y_h.dot(b_y);
        if (std::abs(denom) > 0.1)
            s.omega_ref.z() =
                (e_y_h.dot(b_z) * s.omega_ref.y() + psi_dot * e_x_h.dot(b_x)) / denom;
        else
            s.omega_ref.z() = psi_dot * states[k].r(2, 2);
    }
    return out;
}

ReferenceTrajectory make_analytic_perch_trajectory(const QuadState& s0,
                                                   const AnalyticPerchConfig& cfg) {
    if (!(cfg.dt > 0.0)) throw ValidationError("analytic perch: dt must be positive");
    if (!(cfg.tail_length > 0.0))
        throw ValidationError("analytic perch: tail length must be positive");
    if (!(cfg.handoff_vx < cfg.contact_vx && cfg.contact_vx < 0.0))
        throw ValidationError("analytic perch: need handoff_vx < contact_vx < 0");
    if (!(cfg.handoff_lift >= 0.0 && cfg.handoff_lift < cfg.gravity))
        throw ValidationError("analytic perch: handoff_lift must be in [0, gravity)");
    if (!(cfg.apex_margin > -0.5 && cfg.apex_margin < 1.0))
        throw ValidationError("analytic perch: apex_margin must be in (-0.5, 1)");
    if (!(cfg.gravity > 0.0)) throw ValidationError("analytic perch: gravity must be positive");

    const double g = cfg.gravity;
    const Vec3 g_vec(0.0, 0.0, -g);

    // Ballistic braking tail: constant deceleration in x, free fall in z,
    // so the flat attitude is the perch attitude (pitch 90) all the way to
    // contact. The cruise hands off at the apex of the arc (zero vertical
    // speed), at exactly the height the tail drop consumes.
    const double v_h = -cfg.handoff_vx;
    const double v_c = -cfg.contact_vx;
    const double a_brake = (v_h * v_h - v_c * v_c) / (2.0 * cfg.tail_length);
    const double t_b = (v_h - v_c) / a_brake;
    const Vec3 handoff_pos =
        cfg.perch_point +
        Vec3(cfg.tail_length, 0.0, 0.5 * g * t_b * t_b + cfg.apex_margin);
    const Vec3 handoff_vel(cfg.handoff_vx, 0.0, 0.0);
    // The cruise keeps a little upward thrust at handoff so the tracked
    // portion of the plan never degenerates toward free fall; the tail
    // itself is flown open loop by the attitude hold after the switch.
    const Vec3 handoff_acc(a_brake, 0.0, -g + cfg.handoff_lift);
    const Vec3 tail_acc(a_brake, 0.0, -g);

    if (s0.x.x() - cfg.perch_point.x() <= cfg.tail_length)
        throw ValidationError("analytic perch: initial state starts inside the braking tail");

    // A generous cruise keeps the late pitch-up slow enough for the
    // attitude loop to track, so the quad reaches the handoff at the
    // planned speed and the thrust latched at the switch stays lean.
    double t_a = cfg.cruise_duration;
    if (t_a <= 0.0) {
        const double dist = (s0.x - handoff_pos).norm();
        t_a = std::max(1.6, 2.5 * dist);
    }

    const Quintic qx(s0.x.x(), s0.v.x(), 0.0, handoff_pos.x(), handoff_vel.x(),
                     handoff_acc.x(), t_a);
    const Quintic qy(s0.x.y(), s0.v.y(), 0.0, handoff_pos.y(), handoff_vel.y(),
                     handoff_acc.y(), t_a);
    const Quintic qz(s0.x.z(), s0.v.z(), 0.0, handoff_pos.z(), handoff_vel.z(),
                     handoff_acc.z(), t_a);

    ReferenceTrajectory out;
    out.dt_ref = cfg.dt;
    out.perch_point = cfg.perch_point;
    out.success = true;

    // Ceil so the cruise always emits the exact handoff sample at t_a.
    const int n_a = static_cast<int>(std::ceil(t_a / cfg.dt - 1e-9));
    const int n_b = static_cast<int>(std::ceil(t_b / cfg.dt - 1e-9));
    out.samples.reserve(n_a + n_b + 1);

    for (int k = 0; k <= n_a; ++k) {
        const double t = std::min(k * cfg.dt, t_a);
        TrajectorySample s;
        s.t = t;
        s.x_ref = Vec3(qx.pos(t), qy.pos(t), qz.pos(t));
        s.v_ref = Vec3(qx.vel(t), qy.vel(t), qz.vel(t));
        s.a_ref = Vec3(qx.acc(t), qy.acc(t), qz.acc(t));
        s.jerk_ref = Vec3(qx.jrk(t), qy.jrk(t), qz.jrk(t));
        s.psi_ref = 0.0;
        out.samples.push_back(s);
    }
    for (int k = 1; k <= n_b; ++k) {
        const double tau = std::min(k * cfg.dt, t_b);
        TrajectorySample s;
        s.t = t_a + tau;
        s.x_ref = handoff_pos + handoff_vel * tau + 0.5 * tau * tau * tail_acc;
        s.v_ref = handoff_vel + tau * tail_acc;
        s.a_ref = tail_acc;
        s.jerk_ref = Vec3::Zero();
        s.psi_ref = 0.0;
        out.samples.push_back(s);
    }

    // Flatness feed-forward, with a feasibility check: the cruise must
    // stay clear of the free-fall singularity where attitude is undefined.
    for (TrajectorySample& s : out.samples) {
        FlatFrame fr;
        try {
            fr = flat_frame(s.a_ref, s.psi_ref, g_vec);
        } catch (const ValidationError&) {
            throw ValidationError(
                "analytic perch: plan passes through the free-fall singularity; "
                "adjust the speed schedule or cruise_duration");
        }
        if (fr.f_norm < 0.5)
            throw ValidationError(
                "analytic perch: plan approaches free fall (thrust demand < 0.5 m/s^2); "
                "adjust the speed schedule or cruise_duration");
        s.omega_ref.x() = -s.jerk_ref.dot(fr.b_y) / fr.f_norm;
        s.omega_ref.y() = s.jerk_ref.dot(fr.b_x) / fr.f_norm;
        // A fixed heading still induces a body-z rate: b_x is pinned to
        // e_y x b_z, so tilting b_z swings the whole frame about body z.
        const Vec3 e_y(-std::sin(s.psi_ref), std::cos(s.psi_ref), 0.0);
        s.omega_ref.z() = e_y.dot(fr.b_z) * s.omega_ref.y() / e_y.dot(fr.b_y);
    }
    return out;
}

}  // namespace perch::traj
