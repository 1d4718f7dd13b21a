#include "perch/policy.hpp"

#include <cmath>

#include "perch/errors.hpp"

namespace perch::rl {

namespace {
constexpr double kHalfLog2Pi = 0.9189385332046727;  // 0.5*log(2*pi)
}

Observation observe(const QuadState& s, const Vec3& perch_point) {
    Observation o;
    // Rotation in row-major order.
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) o(3 * i + j) = s.r(i, j);
    o.segment<3>(9) = s.omega;
    o.segment<3>(12) = s.x - perch_point;
    o.segment<3>(15) = s.v;
    return o;
}

double reward(const QuadState& s, const MotorCommand& a, const Vec3& perch_point,
              const Mat3& target_attitude, const RewardWeights& w) {
    const Vec3 xe = s.x - perch_point;
    const double d_x = std::abs(xe.x());
    const double att = rotation_error(target_attitude, s.r).norm();
    return -(w.w1 * std::exp(-d_x) * att + w.w2 * xe.norm() + w.w3 * a.thrust.norm());
}

ActionScale ActionScale::from_params(const QuadParams& p) {
    return {0.5 * (p.thrust_max + p.thrust_min), 0.5 * (p.thrust_max - p.thrust_min)};
}

PolicyNet PolicyNet::init(const std::vector<int>& hidden, const QuadParams& p, RngStream& rng) {
    MlpSpec spec;
    spec.n_in = kObsDim;
    spec.hidden = hidden;
    spec.n_out = 2 * kActDim;
    return {MlpNet::glorot(std::move(spec), rng), ActionScale::from_params(p)};
}

PolicyDist split_heads(const Eigen::MatrixXd& heads, const ActionScale& scale) {
    if (heads.rows() != 2 * kActDim)
        throw ShapeMismatch("split_heads: expected 8 head rows");
    PolicyDist d;
    d.mean = (scale.half_span * heads.topRows(kActDim)).array() + scale.mid;
    d.log_std = heads.bottomRows(kActDim).array().max(kLogStdMin).min(kLogStdMax);
    return d;
}

Eigen::VectorXd log_prob(const PolicyDist& d, const Eigen::MatrixXd& actions) {
    if (actions.rows() != kActDim || actions.cols() != d.mean.cols())
        throw ShapeMismatch("log_prob: action batch shape mismatch");
    const Eigen::ArrayXXd z = (actions - d.mean).array() / d.log_std.array().exp();
    return (-0.5 * z.square() - d.log_std.array() - kHalfLog2Pi).colwise().sum().transpose();
}

Eigen::MatrixXd log_prob_grad_heads(const Eigen::MatrixXd& heads, const ActionScale& scale,
                                    const Eigen::MatrixXd& actions,
                                    const Eigen::VectorXd& weight) {
    const PolicyDist d = split_heads(heads, scale);
    const Eigen::ArrayXXd inv_var = (-2.0 * d.log_std.array()).exp();
    const Eigen::ArrayXXd diff = (actions - d.mean).array();

    Eigen::MatrixXd g(2 * kActDim, heads.cols());
    // d logp / d mean_raw = half_span * (a - mu) / sigma^2
    g.topRows(kActDim) = scale.half_span * (diff * inv_var).matrix();
    // d logp / d log_std = ((a - mu)/sigma)^2 - 1, zeroed where the clamp
    // is active (sub-gradient of a constant).
    const Eigen::ArrayXXd raw_ls = heads.bottomRows(kActDim).array();
    const Eigen::ArrayXXd pass =
        ((raw_ls > kLogStdMin) && (raw_ls < kLogStdMax)).cast<double>();
    g.bottomRows(kActDim) = ((diff.square() * inv_var - 1.0) * pass).matrix();
    return g * weight.asDiagonal();
}

GaussianPolicySample policy_act(const PolicyNet& policy, const Observation& obs,
                                RngStream& rng) {
    const Eigen::VectorXd heads = policy.net.forward(obs);
    const PolicyDist d = split_heads(heads, policy.scale);
    Eigen::Vector4d a;
    for (int i = 0; i < kActDim; ++i)
        a(i) = d.mean(i, 0) + std::exp(d.log_std(i, 0)) * rng.normal();
    GaussianPolicySample s;
    s.action = MotorCommand(a);
    s.log_likelihood = log_prob(d, a)(0);
    return s;
}

MotorCommand policy_mean(const PolicyNet& policy, const Observation& obs) {
    const Eigen::VectorXd heads = policy.net.forward(obs);
    return MotorCommand(split_heads(heads, policy.scale).mean.col(0));
}

double log_likelihood(const PolicyNet& policy, const Observation& obs,
                      const Eigen::Vector4d& action) {
    const Eigen::VectorXd heads = policy.net.forward(obs);
    return log_prob(split_heads(heads, policy.scale), action)(0);
}

double value(const MlpNet& net, const Observation& obs) { return net.forward(obs)(0); }

}  // namespace perch::rl
