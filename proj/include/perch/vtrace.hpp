#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "perch/mlp.hpp"
#include "perch/policy.hpp"

namespace perch::rl {

struct Transition {
    Observation obs;
    Eigen::Vector4d action;  // pre-clamp thrusts
    double reward = 0.0;
    Observation next_obs;
    double behavior_log_likelihood = 0.0;
    bool terminal = false;
};

struct TrainConfig {
    double gamma = 0.99;
    double xi = 0.01;
    double rho_bar = 2.0;
    double lr_policy = 3e-4;
    double lr_value = 1e-3;
    double momentum = 0.9;
    int episode_cap_steps = 3000;
    RewardWeights reward_w{};
    std::uint64_t seed = 0;

    // Optimization schedule.
    int iterations = 60;
    int episodes_per_iter = 8;
    int epochs = 2;
    int minibatch = 1024;
    // Value targets are computed over bounded trajectory fragments so the
    // un-discounted advantage recursion cannot accumulate across thousands
    // of steps; fragment ends bootstrap from the critic.
    int vtrace_horizon = 64;
    // Critic output scale: raw network outputs stay O(1) while targets
    // reach O(gamma-horizon * per-step reward).
    double value_scale = 100.0;
    // Iterations at the start where only the critic is updated, letting
    // advantages settle before policy gradients flow.
    int value_warmup_iters = 5;
    std::vector<int> hidden{128, 128, 32};

    void validate() const;
};

struct VtraceResult {
    Eigen::VectorXd advantage;     // A_t
    Eigen::VectorXd value_target;  // V_t
};

/// Backward recursion over one trajectory fragment:
///   A_t = r_t + gamma*V(s_{t+1}) - V(s_t) + rho_{t+1}*A_{t+1}
///   V_t = V(s_t) + rho_t*A_t
/// with rho_t = min(pi/mu, rho_bar) from log-likelihood differences.
/// A terminal transition bootstraps V(s_{t+1}) = 0 and stops advantage
/// flow across the boundary; a non-terminal fragment end bootstraps from
/// the critic.
VtraceResult vtrace_targets(std::span<const Transition> traj, const MlpNet& value_net,
                            const PolicyNet& policy, const TrainConfig& cfg);

/// Raw-array form of the same recursion, shared with conformance tests
/// that drive it from tabulated values instead of networks. rho_raw holds
/// unclipped importance ratios (clipping to rho_bar happens here);
/// next_values(t) is V(s_{t+1}) and is ignored on terminal steps.
VtraceResult vtrace_recursion(const Eigen::VectorXd& rewards, const Eigen::VectorXd& values,
                              const Eigen::VectorXd& next_values,
                              const Eigen::VectorXd& rho_raw,
                              const std::vector<std::uint8_t>& terminal, double gamma,
                              double rho_bar);

/// Hinge policy objective: zero once the sample satisfies the dominance
/// condition advantage * log_ratio >= xi.
double policy_loss(double advantage, double log_ratio, double xi);

/// Squared error between a value target and the critic's prediction.
double value_loss(double value_target, double v);

}  // namespace perch::rl
