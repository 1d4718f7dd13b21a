#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "perch/policy.hpp"
#include "test_support.hpp"

using namespace perch;
using namespace perch::rl;

TEST_CASE("observe: layout and relative encoding") {
    QuadState s;
    Vec3 perch(0, 0, 0);

    SUBCASE("identity pose at the perch point") {
        Observation o = observe(s, perch);
        Observation expected = Observation::Zero();
        expected(0) = expected(4) = expected(8) = 1.0;
        CHECK(o == expected);
    }

    SUBCASE("translation invariance") {
        s.x = Vec3(1, 2, 3);
        s.v = Vec3(0.1, 0.2, 0.3);
        s.omega = Vec3(-1, 0, 1);
        const Observation a = observe(s, perch);
        const Vec3 shift(10, -5, 2);
        QuadState s2 = s;
        s2.x += shift;
        CHECK(observe(s2, perch + shift) == a);
    }

    SUBCASE("relative position block") {
        s.x = Vec3(1, 2, 3);
        const Observation o = observe(s, Vec3(0, 2, 3));
        CHECK(o.segment<3>(12) == Vec3(1, 0, 0));
    }

    SUBCASE("rotation is row-major") {
        RngStream rng(1);
        s.r = test::random_rotation(rng);
        const Observation o = observe(s, perch);
        CHECK(o(1) == s.r(0, 1));
        CHECK(o(3) == s.r(1, 0));
    }
}

TEST_CASE("reward: zero at the perch pose, gating, weight linearity, sign") {
    const RewardWeights w;
    const Mat3 target = rot_y(kHalfPi);
    const Vec3 perch(0, 0, 0);

    QuadState at_pose;
    at_pose.r = target;
    CHECK(reward(at_pose, MotorCommand(), perch, target, w) == 0.0);

    // Far from the wall the attitude term is exponentially suppressed.
    QuadState far;
    far.x = Vec3(40, 1, 0);
    far.r = Mat3::Identity();  // large attitude error
    const MotorCommand a(1, 1, 1, 1);
    const double r = reward(far, a, perch, target, w);
    const double expected = -(w.w2 * far.x.norm() + w.w3 * a.thrust.norm());
    CHECK(r == doctest::Approx(expected).epsilon(1e-10));

    // Doubling w2 doubles the position term exactly.
    RewardWeights w2 = w;
    w2.w2 *= 2.0;
    const double r2 = reward(far, a, perch, target, w2);
    CHECK(r2 - r == doctest::Approx(-w.w2 * far.x.norm()).epsilon(1e-12));

    RngStream rng(5);
    for (int i = 0; i < 1000; ++i) {
        QuadState s;
        s.r = test::random_rotation(rng);
        s.x = test::random_vec(rng, 3.0);
        Eigen::Vector4d t;
        for (int k = 0; k < 4; ++k) t(k) = rng.uniform(0.0, 6.0);
        CHECK(reward(s, MotorCommand(t), perch, target, w) <= 0.0);
    }
}

TEST_CASE("action scale maps raw zero to mid-range thrust") {
    QuadParams p;
    const ActionScale sc = ActionScale::from_params(p);
    CHECK(sc.mid == 3.0);
    CHECK(sc.half_span == 3.0);
    CHECK(sc.to_thrust(Eigen::Vector4d::Zero()) == Eigen::Vector4d::Constant(3.0));
    CHECK(sc.to_thrust(Eigen::Vector4d::Constant(-1.0)) == Eigen::Vector4d::Zero());
}

TEST_CASE("split_heads clamps the log-std rows") {
    ActionScale sc{3.0, 3.0};
    Eigen::MatrixXd heads(8, 2);
    heads.setZero();
    heads(4, 0) = -9.0;
    heads(5, 0) = 4.0;
    heads(6, 0) = 0.25;
    const PolicyDist d = split_heads(heads, sc);
    CHECK(d.log_std(0, 0) == kLogStdMin);
    CHECK(d.log_std(1, 0) == kLogStdMax);
    CHECK(d.log_std(2, 0) == 0.25);
    CHECK(d.mean(0, 0) == 3.0);
}

TEST_CASE("log_prob matches the closed-form Gaussian density") {
    RngStream rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        PolicyDist d;
        d.mean.resize(4, 1);
        d.log_std.resize(4, 1);
        Eigen::MatrixXd a(4, 1);
        for (int i = 0; i < 4; ++i) {
            d.mean(i, 0) = rng.normal(3.0, 1.0);
            d.log_std(i, 0) = rng.uniform(-3.0, 0.5);
            a(i, 0) = rng.normal(3.0, 2.0);
        }
        double expected = 0.0;
        for (int i = 0; i < 4; ++i) {
            const double sigma = std::exp(d.log_std(i, 0));
            const double z = (a(i, 0) - d.mean(i, 0)) / sigma;
            expected += -0.5 * z * z - std::log(sigma) - 0.5 * std::log(2.0 * kPi);
        }
        CHECK(log_prob(d, a)(0) == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("policy_act: determinism, density consistency, mean mode") {
    QuadParams p;
    RngStream init(1);
    PolicyNet policy = PolicyNet::init({16, 16}, p, init);
    RngStream rparam(2);
    for (double& v : policy.net.params()) v = rparam.normal(0.0, 0.2);

    QuadState s;
    s.x = Vec3(2, 0.3, -0.1);
    s.v = Vec3(-1, 0, 0.2);
    const Observation obs = observe(s, Vec3::Zero());

    RngStream a1(77), a2(77);
    const GaussianPolicySample s1 = policy_act(policy, obs, a1);
    const GaussianPolicySample s2 = policy_act(policy, obs, a2);
    CHECK(s1.action.thrust == s2.action.thrust);
    CHECK(s1.log_likelihood == s2.log_likelihood);

    CHECK(log_likelihood(policy, obs, s1.action.thrust) ==
          doctest::Approx(s1.log_likelihood).epsilon(1e-12));

    // Deterministic mode returns the distribution mean exactly.
    const Eigen::VectorXd heads = policy.net.forward(obs);
    const PolicyDist d = split_heads(heads, policy.scale);
    CHECK(policy_mean(policy, obs).thrust == Eigen::Vector4d(d.mean.col(0)));
}

TEST_CASE("fresh policy acts at mid-thrust; fresh critic is zero") {
    QuadParams p;
    RngStream rng(3);
    const PolicyNet policy = PolicyNet::init({32, 32}, p, rng);

    MlpSpec vspec;
    vspec.n_in = kObsDim;
    vspec.hidden = {32, 32};
    vspec.n_out = 1;
    vspec.output_scale = 100.0;
    RngStream vr(4);
    const MlpNet critic = MlpNet::glorot(vspec, vr);

    QuadState s;
    s.x = Vec3(1.5, 0.2, 0.4);
    const Observation obs = observe(s, Vec3::Zero());
    CHECK(policy_mean(policy, obs).thrust == Eigen::Vector4d::Constant(3.0));
    CHECK(value(critic, obs) == 0.0);
}

TEST_CASE("log_prob_grad_heads matches finite differences of the density") {
    RngStream rng(11);
    const ActionScale sc{3.0, 3.0};
    const int batch = 6;

    Eigen::MatrixXd heads(8, batch);
    Eigen::MatrixXd actions(4, batch);
    Eigen::VectorXd weight(batch);
    for (int c = 0; c < batch; ++c) {
        for (int r = 0; r < 4; ++r) heads(r, c) = rng.normal(0.0, 0.8);
        // Moderate log-stds and actions near the mean keep z = (a - mu)/sigma
        // O(1), so the finite-difference check below stays well conditioned.
        for (int r = 4; r < 8; ++r) heads(r, c) = rng.normal(0.0, 0.5);
        weight(c) = rng.normal(0.0, 2.0);
    }
    {
        const PolicyDist d0 = split_heads(heads, sc);
        for (int c = 0; c < batch; ++c)
            for (int r = 0; r < 4; ++r)
                actions(r, c) = d0.mean(r, c) + std::exp(d0.log_std(r, c)) * rng.normal();
    }
    heads(4, 0) = -7.0;  // exercise the clamp: gradient must be zero here
    heads(5, 1) = 3.0;

    const Eigen::MatrixXd g = log_prob_grad_heads(heads, sc, actions, weight);
    CHECK(g(4, 0) == 0.0);
    CHECK(g(5, 1) == 0.0);

    auto weighted_sum = [&] {
        return (log_prob(split_heads(heads, sc), actions).array() * weight.array()).sum();
    };
    const double floor = 1e-6 * std::max(1.0, std::abs(weighted_sum()));
    int checked = 0;
    double max_rel = 0.0;
    for (int c = 0; c < batch; ++c) {
        for (int r = 0; r < 8; ++r) {
            const double orig = heads(r, c);
            const double h = 1e-6;
            heads(r, c) = orig + h;
            const double lp = weighted_sum();
            heads(r, c) = orig - h;
            const double lm = weighted_sum();
            heads(r, c) = orig;
            const double fd = (lp - lm) / (2 * h);
            const double bp = g(r, c);
            if (std::max(std::abs(fd), std::abs(bp)) < floor) continue;
            max_rel = std::max(max_rel,
                               std::abs(fd - bp) / std::max(std::abs(fd), std::abs(bp)));
            ++checked;
        }
    }
    CHECK(checked >= 30);
    CHECK(max_rel < 1e-4);
}
