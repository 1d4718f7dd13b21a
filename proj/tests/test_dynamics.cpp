#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "perch/dynamics.hpp"
#include "perch/errors.hpp"
#include "test_support.hpp"

using namespace perch;

namespace {

MotorCommand random_command(RngStream& rng, const QuadParams& p) {
    Eigen::Vector4d t;
    for (int i = 0; i < 4; ++i) t(i) = rng.uniform(p.thrust_min, p.thrust_max);
    return MotorCommand(t);
}

}  // namespace

TEST_CASE("params validate and hover thrust") {
    QuadParams p;
    p.validate();
    CHECK(p.hover_thrust() == doctest::Approx(9.81));

    QuadParams bad = p;
    bad.mass = -1.0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("mix_forward: symmetry cases") {
    QuadParams p;
    const double h = 2.0;

    const GeneralizedForce hover = mix_forward(MotorCommand(h, h, h, h), p);
    CHECK(hover.tau.norm() == 0.0);
    CHECK(hover.tz == 4 * h);

    const GeneralizedForce yaw = mix_forward(MotorCommand(h, h, 0, 0), p);
    CHECK(yaw.tau.x() == doctest::Approx(0.0));
    CHECK(yaw.tau.y() == doctest::Approx(0.0));
    CHECK(yaw.tau.z() == doctest::Approx(2 * h * p.k_m / p.k_f));
    CHECK(yaw.tz == 2 * h);

    const GeneralizedForce zero = mix_forward(MotorCommand(), p);
    CHECK(zero.tau.norm() == 0.0);
    CHECK(zero.tz == 0.0);
}

TEST_CASE("mix_forward is linear pre-clamp") {
    QuadParams p;
    RngStream rng(123);
    for (int i = 0; i < 100; ++i) {
        const MotorCommand c1 = random_command(rng, p);
        const MotorCommand c2 = random_command(rng, p);
        const double a = rng.uniform(-2.0, 2.0), b = rng.uniform(-2.0, 2.0);
        const GeneralizedForce lhs =
            mix_forward(MotorCommand(a * c1.thrust + b * c2.thrust), p);
        const GeneralizedForce f1 = mix_forward(c1, p);
        const GeneralizedForce f2 = mix_forward(c2, p);
        CHECK((lhs.tau - (a * f1.tau + b * f2.tau)).norm() < 1e-12);
        CHECK(lhs.tz == doctest::Approx(a * f1.tz + b * f2.tz).epsilon(1e-12));
    }
}

TEST_CASE("mix_inverse: roundtrip, hover, saturation") {
    QuadParams p;
    RngStream rng(99);
    for (int i = 0; i < 1000; ++i) {
        const MotorCommand c = random_command(rng, p);
        const MixResult back = mix_inverse(mix_forward(c, p), p);
        CHECK((back.cmd.thrust - c.thrust).norm() < 1e-9);
        CHECK(!back.saturated);
    }

    GeneralizedForce hover;
    hover.tz = p.hover_thrust();
    const MixResult eq = mix_inverse(hover, p);
    for (int i = 0; i < 4; ++i)
        CHECK(eq.cmd.thrust(i) == doctest::Approx(p.hover_thrust() / 4));

    GeneralizedForce huge;
    huge.tz = 5.0 * p.thrust_max * 4;
    const MixResult sat = mix_inverse(huge, p);
    CHECK(sat.saturated);
    CHECK(sat.cmd.within_bounds(p));
}

TEST_CASE("state_derivative: equilibrium, free fall, principal-axis spin") {
    QuadParams p;
    QuadState s;

    GeneralizedForce hover;
    hover.tz = p.mass * 9.81;
    const QuadStateDerivative eq = state_derivative(s, hover, p);
    CHECK(eq.v_dot.norm() < 1e-12);
    CHECK(eq.omega_dot.norm() == 0.0);

    QuadState tilted;
    tilted.r = test::axis_angle(Vec3(1, 2, 0.5), 0.7);
    const QuadStateDerivative ff = state_derivative(tilted, GeneralizedForce{}, p);
    CHECK((ff.v_dot - p.gravity).norm() == 0.0);

    QuadState spin;
    spin.omega = Vec3(0, 0, 5);  // principal axis of the diagonal inertia
    const QuadStateDerivative sp = state_derivative(spin, GeneralizedForce{}, p);
    CHECK(sp.omega_dot.norm() < 1e-12);
}

TEST_CASE("step: free fall is exact for constant acceleration") {
    QuadParams p;
    QuadState s;
    s.x = Vec3(0, 0, 100);
    for (int i = 0; i < 1000; ++i) s = step(s, MotorCommand(), 1e-3, p);
    CHECK(std::abs(s.v.z() + 9.81) < 1e-9);
    CHECK(std::abs(s.v.x()) == 0.0);
    CHECK(std::abs(s.v.y()) == 0.0);
}

TEST_CASE("step: hover equilibrium holds for 5 s") {
    QuadParams p;
    QuadState s;
    s.x = Vec3(1, 2, 3);
    const double per_motor = p.hover_thrust() / 4;
    const MotorCommand hover(per_motor, per_motor, per_motor, per_motor);
    for (int i = 0; i < 5000; ++i) s = step(s, hover, 1e-3, p);
    CHECK((s.x - Vec3(1, 2, 3)).norm() < 1e-6);
}

TEST_CASE("step: torque-free principal-axis spin is constant for 10 s") {
    QuadParams p;
    QuadState s;
    s.x = Vec3(0, 0, 1e4);  // far above ground; free fall is irrelevant here
    s.omega = Vec3(0, 0, 3);
    for (int i = 0; i < 10000; ++i) {
        s = step(s, MotorCommand(), 1e-3, p);
        CHECK((s.omega - Vec3(0, 0, 3)).norm() < 1e-6);
    }
}

TEST_CASE("step: rotation stays orthonormal over a random-command rollout") {
    QuadParams p;
    RngStream rng(2024);
    QuadState s;
    s.x = Vec3(0, 0, 1e5);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        // Near-hover commands with random torque content keep the state
        // inside the sanity envelope for the full 10 s.
        const double base = p.hover_thrust() / 4;
        Eigen::Vector4d t;
        for (int k = 0; k < 4; ++k) t(k) = base + rng.uniform(-0.05, 0.05);
        s = step(s, MotorCommand(t), 1e-3, p);
        worst = std::max(worst, (s.r.transpose() * s.r - Mat3::Identity()).norm());
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("step: determinism is bitwise") {
    QuadParams p;
    QuadState a, b;
    a.x = b.x = Vec3(0.1, -0.2, 5.0);
    a.v = b.v = Vec3(1, 2, 3);
    a.omega = b.omega = Vec3(0.5, -0.5, 0.25);
    const MotorCommand cmd(2.0, 2.5, 2.25, 2.4);
    for (int i = 0; i < 100; ++i) {
        a = step(a, cmd, 1e-3, p);
        b = step(b, cmd, 1e-3, p);
    }
    CHECK(a.r == b.r);
    CHECK(a.omega == b.omega);
    CHECK(a.x == b.x);
    CHECK(a.v == b.v);
}

TEST_CASE("step: sanity-bound violation raises SimulationDiverged") {
    QuadParams p;
    QuadState s;
    s.v = Vec3(0, 0, -99.9999);
    CHECK_THROWS_AS(step(s, MotorCommand(), 1e-2, p), SimulationDiverged);

    CHECK_THROWS_AS(step(QuadState{}, MotorCommand(), 0.02, p), ValidationError);
    CHECK_THROWS_AS(step(QuadState{}, MotorCommand(), 0.0, p), ValidationError);
}

TEST_CASE("zero-thrust energy balance within Euler truncation") {
    QuadParams p;
    RngStream rng(17);
    for (int i = 0; i < 100; ++i) {
        QuadState s;
        s.r = test::random_rotation(rng);
        s.x = Vec3(0, 0, 50);
        s.v = test::random_vec(rng, 5.0);
        const double dt = 1e-3;
        const double ke0 = 0.5 * p.mass * s.v.squaredNorm();
        const double z0 = s.x.z();
        const QuadState s1 = step(s, MotorCommand(), dt, p);
        const double dke = 0.5 * p.mass * s1.v.squaredNorm() - ke0;
        const double dpe = p.mass * 9.81 * (s1.x.z() - z0);
        CHECK(std::abs(dke + dpe) <= p.mass * 9.81 * 9.81 * dt * dt);
    }
}

TEST_CASE("rotor speeds invert the thrust model") {
    QuadParams p;
    const MotorCommand c(1.0, 2.0, 3.0, 4.0);
    const Eigen::Vector4d w = rotor_speeds(c, p);
    for (int i = 0; i < 4; ++i)
        CHECK(p.k_f * w(i) * w(i) == doctest::Approx(c.thrust(i)).epsilon(1e-12));
}
