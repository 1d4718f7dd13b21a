#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "perch/errors.hpp"
#include "perch/trajectory.hpp"
#include "test_support.hpp"

using namespace perch;
using namespace perch::traj;

namespace {

/// Policy surrogate whose mean action is an exact hover: a zero network
/// with the action scale midpoint moved to the per-motor hover thrust.
rl::PolicyNet hover_policy(const QuadParams& p) {
    rl::MlpSpec spec;
    spec.n_in = rl::kObsDim;
    spec.hidden = {4};
    spec.n_out = 2 * rl::kActDim;
    rl::PolicyNet policy{rl::MlpNet(spec), rl::ActionScale{p.hover_thrust() / 4.0, 1.0}};
    return policy;
}

std::vector<MotorCommand> hover_actions(const QuadParams& p, int n) {
    const double h = p.hover_thrust() / 4.0;
    return std::vector<MotorCommand>(n, MotorCommand(h, h, h, h));
}

}  // namespace

TEST_CASE("rollout: hover surrogate stays put, deterministically") {
    QuadParams p;
    const rl::PolicyNet policy = hover_policy(p);
    QuadState s0;
    s0.x = Vec3(2, 0, 0);

    RolloutConfig cfg;
    cfg.step_cap = 200;
    const RolloutResult a = rollout(policy, s0, p, cfg);
    CHECK(a.states.size() == 201);  // cap reached, no contact
    CHECK(!a.success);
    CHECK((a.states.back().x - s0.x).norm() < 1e-6);

    const RolloutResult b = rollout(policy, s0, p, cfg);
    REQUIRE(a.states.size() == b.states.size());
    for (size_t i = 0; i < a.states.size(); ++i) CHECK(a.states[i].x == b.states[i].x);
}

TEST_CASE("rollout: sanity violation surfaces as PolicyDiverged") {
    QuadParams p;
    // Zero-thrust surrogate: a zero net with a zero-centered action scale.
    rl::PolicyNet zero = hover_policy(p);
    zero.scale = rl::ActionScale{0.0, 1.0};

    QuadState s0;
    s0.x = Vec3(500, 0, 0);
    s0.v = Vec3(0, 0, -99.0);  // free fall crosses the 100 m/s bound quickly
    RolloutConfig cfg;
    cfg.step_cap = 3000;
    CHECK_THROWS_AS(rollout(zero, s0, p, cfg), PolicyDiverged);
}

TEST_CASE("check_perch_success: pose cases") {
    const Vec3 perch(0, 0, 0);
    const PerchTolerance tol;

    QuadState exact;
    exact.x = perch;
    exact.r = rot_y(kHalfPi);
    CHECK(check_perch_success(exact, perch, tol));

    QuadState shallow = exact;
    shallow.r = rot_y(kPi / 4.0);
    CHECK(!check_perch_success(shallow, perch, tol));

    // Published mean contact values land inside the default tolerances.
    QuadState reported;
    reported.x = Vec3(0.0, -0.0047, -0.0174);
    reported.r = rot_y(88.83 * kPi / 180.0);
    CHECK(check_perch_success(reported, perch, tol));

    QuadState off_plane = exact;
    off_plane.x = Vec3(0.05, 0, 0);
    CHECK(!check_perch_success(off_plane, perch, tol));

    QuadState off_lateral = exact;
    off_lateral.x = Vec3(0, 0.04, 0.04);  // hypot > 5 cm
    CHECK(!check_perch_success(off_lateral, perch, tol));
}

TEST_CASE("derive_references: hover gives constant yaw and zero derivatives") {
    QuadParams p;
    QuadState s;
    s.x = Vec3(1, 2, 3);
    s.r = rot_z(0.7);
    const int n = 50;
    const std::vector<QuadState> states(n, s);
    const ReferenceTrajectory ref =
        derive_references(states, hover_actions(p, n - 1), p, 1e-3, Vec3::Zero(), false);

    REQUIRE(ref.samples.size() == n);
    for (const TrajectorySample& smp : ref.samples) {
        CHECK(smp.x_ref == s.x);
        CHECK(smp.a_ref.norm() < 1e-12);
        CHECK(smp.jerk_ref.norm() < 1e-9);
        CHECK(smp.psi_ref == doctest::Approx(0.7));
        CHECK(smp.omega_ref.norm() < 1e-9);
    }
    for (size_t k = 1; k < ref.samples.size(); ++k)
        CHECK(ref.samples[k].t > ref.samples[k - 1].t);
}

TEST_CASE("derive_references: constant-velocity level flight") {
    QuadParams p;
    const int n = 40;
    const double dt = 1e-3;
    std::vector<QuadState> states(n);
    for (int k = 0; k < n; ++k) {
        states[k].x = Vec3(1, 0, 2) + k * dt * Vec3(0.5, -0.25, 0);
        states[k].v = Vec3(0.5, -0.25, 0);
    }
    const ReferenceTrajectory ref =
        derive_references(states, hover_actions(p, n - 1), p, dt, Vec3::Zero(), false);
    for (const TrajectorySample& smp : ref.samples) {
        CHECK(smp.v_ref == Vec3(0.5, -0.25, 0));
        CHECK(smp.a_ref.norm() < 1e-12);  // hover thrust exactly cancels gravity
        CHECK(smp.jerk_ref.norm() < 1e-9);
        CHECK(smp.omega_ref.norm() < 1e-9);
    }
}

TEST_CASE("derive_references: translation equivariance") {
    QuadParams p;
    RngStream rng(8);
    const int n = 30;
    std::vector<QuadState> states(n);
    std::vector<MotorCommand> actions;
    for (int k = 0; k < n; ++k) {
        states[k].r = test::axis_angle(Vec3(0, 1, 0), 0.01 * k);
        states[k].x = Vec3(2.0 - 0.02 * k, 0.1 * std::sin(0.2 * k), 0.05 * k);
        states[k].v = test::random_vec(rng, 0.5);
        if (k < n - 1) {
            Eigen::Vector4d t;
            for (int i = 0; i < 4; ++i) t(i) = rng.uniform(1.0, 4.0);
            actions.emplace_back(t);
        }
    }
    const Vec3 shift(3, -7, 11);
    std::vector<QuadState> shifted = states;
    for (QuadState& s : shifted) s.x += shift;

    const ReferenceTrajectory a = derive_references(states, actions, p, 1e-3, Vec3::Zero(), false);
    const ReferenceTrajectory b = derive_references(shifted, actions, p, 1e-3, shift, false);
    for (int k = 0; k < n; ++k) {
        CHECK((b.samples[k].x_ref - a.samples[k].x_ref - shift).norm() < 1e-12);
        CHECK(b.samples[k].v_ref == a.samples[k].v_ref);
        CHECK(b.samples[k].a_ref == a.samples[k].a_ref);
        CHECK(b.samples[k].jerk_ref == a.samples[k].jerk_ref);
        CHECK(b.samples[k].omega_ref == a.samples[k].omega_ref);
    }
}

TEST_CASE("derive_references: vertical polynomial recovers its jerk") {
    // Vertical quintic flown with identity attitude: the thrust profile
    // m*(p'' + g) realizes a_z = p'' exactly, so the finite-differenced
    // jerk must match the analytic third derivative to O(dt^2).
    QuadParams p;
    const double dt = 1e-3, T = 1.0;
    const int n = static_cast<int>(T / dt) + 1;
    auto pos = [](double t) { return 10 * t * t * t - 15 * t * t * t * t + 6 * t * t * t * t * t; };
    auto vel = [](double t) { return 30 * t * t - 60 * t * t * t + 30 * t * t * t * t; };
    auto acc = [](double t) { return 60 * t - 180 * t * t + 120 * t * t * t; };
    auto jrk = [](double t) { return 60 - 360 * t + 360 * t * t; };

    std::vector<QuadState> states(n);
    std::vector<MotorCommand> actions;
    for (int k = 0; k < n; ++k) {
        const double t = k * dt;
        states[k].x = Vec3(0, 0, pos(t));
        states[k].v = Vec3(0, 0, vel(t));
        if (k < n - 1) {
            const double per_motor = p.mass * (acc(t) + 9.81) / 4.0;
            actions.emplace_back(per_motor, per_motor, per_motor, per_motor);
        }
    }
    const ReferenceTrajectory ref = derive_references(states, actions, p, dt, Vec3::Zero(), false);
    double worst_interior = 0.0;
    for (int k = 1; k < n - 1; ++k)
        worst_interior = std::max(
            worst_interior, std::abs(ref.samples[k].jerk_ref.z() - jrk(k * dt)));
    CHECK(worst_interior < 1e-3);  // O(dt^2) with the quintic's fifth derivative
}

TEST_CASE("derive_references: shape errors") {
    QuadParams p;
    const std::vector<QuadState> three(3);
    CHECK_THROWS_AS(derive_references(three, hover_actions(p, 2), p, 1e-3, Vec3::Zero(), false),
                    TooShort);
    const std::vector<QuadState> five(5);
    CHECK_THROWS_AS(derive_references(five, hover_actions(p, 2), p, 1e-3, Vec3::Zero(), false),
                    ShapeMismatch);
}

TEST_CASE("analytic perch plan: geometry, continuity, terminal attitude") {
    QuadState s0;
    s0.x = Vec3(2.0, 0.3, -0.2);
    s0.v = Vec3(-0.2, 0.1, 0.3);
    AnalyticPerchConfig cfg;
    const ReferenceTrajectory ref = make_analytic_perch_trajectory(s0, cfg);

    REQUIRE(ref.samples.size() > 100);
    CHECK(ref.success);

    // Starts at s0, ends on the wall plane at the perch point.
    CHECK((ref.samples.front().x_ref - s0.x).norm() < 1e-9);
    CHECK((ref.samples.front().v_ref - s0.v).norm() < 1e-9);
    const TrajectorySample& last = ref.samples.back();
    CHECK(std::abs(last.x_ref.x()) < 1e-9);
    CHECK(std::abs(last.x_ref.y()) < 1e-9);
    CHECK(std::abs(last.x_ref.z() - cfg.apex_margin) < 1e-9);
    CHECK(last.v_ref.x() == doctest::Approx(cfg.contact_vx));

    // Strictly increasing time, kinematic consistency, finite samples.
    // Forward differences carry a truncation error of half the next
    // derivative, so the bounds scale with the plan's own acc/jerk peaks.
    double max_acc = 0.0;
    double max_jerk = 0.0;
    for (const TrajectorySample& s : ref.samples) {
        max_acc = std::max(max_acc, s.a_ref.norm());
        max_jerk = std::max(max_jerk, s.jerk_ref.norm());
    }
    // The plan is C1 by design: acceleration jumps once, where the cruise
    // hands off to the ballistic tail (the first exactly-zero-jerk sample).
    size_t seam = ref.samples.size();
    for (size_t k = 1; k < ref.samples.size(); ++k)
        if (ref.samples[k].jerk_ref.isZero(0.0)) {
            seam = k;
            break;
        }
    for (size_t k = 1; k < ref.samples.size(); ++k) {
        const TrajectorySample& a = ref.samples[k - 1];
        const TrajectorySample& b = ref.samples[k];
        CHECK(b.t > a.t);
        const double dt = b.t - a.t;
        CHECK(((b.x_ref - a.x_ref) / dt - a.v_ref).norm() <= (max_acc + 1.0) * dt);
        if (k == seam) continue;
        CHECK(((b.v_ref - a.v_ref) / dt - a.a_ref).norm() <= (0.5 * max_jerk + 1.0) * dt);
    }

    // Tail duration from the trapezoid rule: distance / mean speed.
    const double t_tail = 2.0 * cfg.tail_length / (-cfg.handoff_vx - cfg.contact_vx);

    // The cruise hands off at the apex of the arc: zero vertical speed, at
    // exactly the height the ballistic tail consumes on the way down.
    const double t_handoff = ref.samples.back().t - t_tail;
    size_t nearest = 0;
    for (size_t k = 1; k < ref.samples.size(); ++k)
        if (std::abs(ref.samples[k].t - t_handoff) <
            std::abs(ref.samples[nearest].t - t_handoff))
            nearest = k;
    CHECK(std::abs(ref.samples[nearest].v_ref.z()) < 1e-9);
    CHECK(ref.samples[nearest].x_ref.z() ==
          doctest::Approx(0.5 * cfg.gravity * t_tail * t_tail + cfg.apex_margin)
              .epsilon(1e-9));

    // Through the braking tail the flat attitude is the perch attitude.
    int tail_samples = 0;
    for (const TrajectorySample& s : ref.samples) {
        if (s.t < t_handoff + 1e-9) continue;
        ++tail_samples;
        const Vec3 f = s.a_ref - Vec3(0, 0, -cfg.gravity);
        CHECK(f.normalized().x() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(s.omega_ref.norm() < 1e-12);
    }
    CHECK(tail_samples >= static_cast<int>(t_tail / cfg.dt) - 1);
}

TEST_CASE("analytic perch plan: flatness feed-forward matches rotated-frame differences") {
    // Independent oracle: rebuild the flat attitude at each sample from
    // (a - g, psi), then difference rotations to get body rates.
    QuadState s0;
    s0.x = Vec3(2.2, -0.3, 0.4);
    s0.v = Vec3(0.1, -0.1, 0.0);
    AnalyticPerchConfig cfg;
    const ReferenceTrajectory ref = make_analytic_perch_trajectory(s0, cfg);

    auto frame_of = [&](const TrajectorySample& s) {
        const Vec3 f = s.a_ref - Vec3(0, 0, -cfg.gravity);
        const Vec3 b_z = f.normalized();
        const Vec3 e_y(-std::sin(s.psi_ref), std::cos(s.psi_ref), 0.0);
        const Vec3 b_x = e_y.cross(b_z).normalized();
        const Vec3 b_y = b_z.cross(b_x).normalized();
        Mat3 r;
        r.col(0) = b_x;
        r.col(1) = b_y;
        r.col(2) = b_z;
        return r;
    };

    // The plan is C^2 by design: jerk (and so omega_ref) jumps where the
    // cruise meets the ballistic window, and a central difference straddling
    // the jump measures the average of the two one-sided rates rather than
    // either one. Locate the first ballistic sample (exactly zero jerk) and
    // skip its immediate neighborhood; both smooth segments are checked.
    const int n = static_cast<int>(ref.samples.size());
    int handoff = n;
    for (int k = 1; k < n; ++k)
        if (ref.samples[k].jerk_ref.isZero(0.0)) {
            handoff = k;
            break;
        }

    double num = 0.0, den = 0.0;
    for (int k = 1; k < n - 1; ++k) {
        if (std::abs(k - handoff) <= 1) continue;
        const double dt = ref.samples[k + 1].t - ref.samples[k - 1].t;
        const Mat3 r = frame_of(ref.samples[k]);
        const Mat3 dr = frame_of(ref.samples[k + 1]) - frame_of(ref.samples[k - 1]);
        const Mat3 omega_hat = r.transpose() * dr / dt;
        const Vec3 omega_fd(omega_hat(2, 1), omega_hat(0, 2), omega_hat(1, 0));
        num += (omega_fd - ref.samples[k].omega_ref).squaredNorm();
        den += omega_fd.squaredNorm();
    }
    CHECK(std::sqrt(num / den) < 0.05);  // 5% RMS consistency on the smooth plan
}

TEST_CASE("analytic perch plan: validation failures") {
    QuadState s0;
    s0.x = Vec3(2, 0, 0);
    AnalyticPerchConfig cfg;

    AnalyticPerchConfig bad_tail = cfg;
    bad_tail.tail_length = 0.0;
    CHECK_THROWS_AS(make_analytic_perch_trajectory(s0, bad_tail), ValidationError);

    AnalyticPerchConfig bad_order = cfg;
    bad_order.handoff_vx = -0.1;  // slower than contact speed
    CHECK_THROWS_AS(make_analytic_perch_trajectory(s0, bad_order), ValidationError);

    AnalyticPerchConfig bad_lift = cfg;
    bad_lift.handoff_lift = 12.0;  // would exceed gravity: no apex exists
    CHECK_THROWS_AS(make_analytic_perch_trajectory(s0, bad_lift), ValidationError);

    QuadState inside;
    inside.x = Vec3(0.2, 0, 0);  // already inside the terminal window span
    CHECK_THROWS_AS(make_analytic_perch_trajectory(inside, cfg), ValidationError);
}
