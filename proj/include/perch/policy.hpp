#pragma once

#include <Eigen/Dense>

#include "perch/dynamics.hpp"
#include "perch/mlp.hpp"
#include "perch/rng.hpp"
#include "perch/so3.hpp"

namespace perch::rl {

/// Network input: attitude (row-major), body rates, position relative to
/// the perch point, and inertial velocity. 18 reals.
constexpr int kObsDim = 18;
constexpr int kActDim = 4;

using Observation = Eigen::Matrix<double, kObsDim, 1>;

Observation observe(const QuadState& s, const Vec3& perch_point);

struct RewardWeights {
    double w1 = 5.0;   // attitude error, gated by closeness to the wall
    double w2 = 2.0;   // position error
    double w3 = 0.05;  // control effort
};

/// Shaped reward: always <= 0, zero only at the perch pose with zero
/// action. The attitude term is gated by exp(-d_x) so alignment with the
/// wall only starts to matter on final approach.
double reward(const QuadState& s, const MotorCommand& a, const Vec3& perch_point,
              const Mat3& target_attitude, const RewardWeights& w);

/// Affine map from a raw network output to the thrust interval, centered
/// on its midpoint. Raw 0 lands exactly mid-range.
struct ActionScale {
    double mid = 0.0;
    double half_span = 1.0;

    static ActionScale from_params(const QuadParams& p);
    Eigen::Vector4d to_thrust(const Eigen::Vector4d& raw) const {
        return Eigen::Vector4d::Constant(mid) + half_span * raw;
    }
};

constexpr double kLogStdMin = -5.0;
constexpr double kLogStdMax = 1.0;

/// Diagonal-Gaussian motor policy: the net emits 4 raw action means and 4
/// log standard deviations. Means are mapped through ActionScale into
/// thrust units; log-stds are clamped to [kLogStdMin, kLogStdMax].
struct PolicyNet {
    MlpNet net;
    ActionScale scale;

    static PolicyNet init(const std::vector<int>& hidden, const QuadParams& p, RngStream& rng);
};

struct GaussianPolicySample {
    MotorCommand action;    // pre-clamp; the environment saturates
    double log_likelihood;  // exact density of the unclamped sample
};

/// Distribution parameters in thrust units for a batch of observations
/// (one column per observation).
struct PolicyDist {
    Eigen::MatrixXd mean;
    Eigen::MatrixXd log_std;
};

/// Maps raw head outputs (8 x B) to clamped distribution parameters.
PolicyDist split_heads(const Eigen::MatrixXd& heads, const ActionScale& scale);

/// Column-wise diagonal-Gaussian log density of actions (4 x B).
Eigen::VectorXd log_prob(const PolicyDist& d, const Eigen::MatrixXd& actions);

/// d(log p)/d(raw heads), each column scaled by weight(col). Clamped
/// log-std coordinates receive zero gradient.
Eigen::MatrixXd log_prob_grad_heads(const Eigen::MatrixXd& heads, const ActionScale& scale,
                                    const Eigen::MatrixXd& actions,
                                    const Eigen::VectorXd& weight);

GaussianPolicySample policy_act(const PolicyNet& policy, const Observation& obs, RngStream& rng);

/// Deterministic mode: the mean action, used for evaluation rollouts.
MotorCommand policy_mean(const PolicyNet& policy, const Observation& obs);

/// Log density of an arbitrary action under the policy at obs.
double log_likelihood(const PolicyNet& policy, const Observation& obs,
                      const Eigen::Vector4d& action);

/// Critic evaluation at a single observation.
double value(const MlpNet& net, const Observation& obs);

}  // namespace perch::rl
