#include "perch/vtrace.hpp"

#include <algorithm>
#include <cmath>

#include "perch/errors.hpp"

namespace perch::rl {

void TrainConfig::validate() const {
    if (!(gamma > 0.0 && gamma < 1.0)) throw ValidationError("train: gamma must be in (0,1)");
    if (!(xi > 0.0)) throw ValidationError("train: xi must be positive");
    if (!(rho_bar >= 1.0)) throw ValidationError("train: rho_bar must be >= 1");
    if (lr_policy < 0.0 || lr_value < 0.0)
        throw ValidationError("train: learning rates must be non-negative");
    if (!(momentum >= 0.0 && momentum < 1.0))
        throw ValidationError("train: momentum must be in [0,1)");
    if (episode_cap_steps < 1) throw ValidationError("train: episode cap must be >= 1");
    if (!(reward_w.w1 > 0.0 && reward_w.w2 > 0.0 && reward_w.w3 > 0.0))
        throw ValidationError("train: reward weights must be positive");
    if (iterations < 1 || episodes_per_iter < 1 || epochs < 1 || minibatch < 1)
        throw ValidationError("train: schedule sizes must be >= 1");
    if (vtrace_horizon < 1) throw ValidationError("train: vtrace horizon must be >= 1");
    if (!(value_scale > 0.0)) throw ValidationError("train: value scale must be positive");
    if (value_warmup_iters < 0) throw ValidationError("train: warmup must be >= 0");
    for (int h : hidden)
        if (h < 1) throw ValidationError("train: hidden widths must be >= 1");
    if (hidden.empty()) throw ValidationError("train: at least one hidden layer");
}

VtraceResult vtrace_recursion(const Eigen::VectorXd& rewards, const Eigen::VectorXd& values,
                              const Eigen::VectorXd& next_values,
                              const Eigen::VectorXd& rho_raw,
                              const std::vector<std::uint8_t>& terminal, double gamma,
                              double rho_bar) {
    const int n = static_cast<int>(rewards.size());
    if (n == 0) throw EmptyTrajectory("vtrace_recursion: empty trajectory");

    Eigen::VectorXd rho(n);
    for (int t = 0; t < n; ++t) rho(t) = std::min(rho_raw(t), rho_bar);

    VtraceResult out;
    out.advantage.resize(n);
    out.value_target.resize(n);

    double a_next = 0.0;  // A_{t+1}, zero beyond the fragment
    for (int t = n - 1; t >= 0; --t) {
        double v_next;
        if (terminal[t]) {
            v_next = 0.0;
            a_next = 0.0;  // no advantage flow across an episode boundary
        } else {
            v_next = next_values(t);
        }
        const double rho_next = (t == n - 1) ? 0.0 : rho(t + 1);
        const double a_t = rewards(t) + gamma * v_next - values(t) + rho_next * a_next;
        out.advantage(t) = a_t;
        out.value_target(t) = values(t) + rho(t) * a_t;
        a_next = a_t;
    }
    return out;
}

VtraceResult vtrace_targets(std::span<const Transition> traj, const MlpNet& value_net,
                            const PolicyNet& policy, const TrainConfig& cfg) {
    if (traj.empty()) throw EmptyTrajectory("vtrace_targets: empty trajectory");
    const int n = static_cast<int>(traj.size());

    Eigen::MatrixXd obs(kObsDim, n);
    Eigen::MatrixXd actions(kActDim, n);
    for (int t = 0; t < n; ++t) {
        obs.col(t) = traj[t].obs;
        actions.col(t) = traj[t].action;
    }

    const Eigen::MatrixXd heads = policy.net.forward_batch(obs);
    const Eigen::VectorXd log_pi = log_prob(split_heads(heads, policy.scale), actions);
    const Eigen::VectorXd values = value_net.forward_batch(obs).row(0).transpose();

    Eigen::VectorXd rewards(n);
    Eigen::VectorXd next_values(n);
    Eigen::VectorXd rho_raw(n);
    std::vector<std::uint8_t> terminal(n);
    for (int t = 0; t < n; ++t) {
        rewards(t) = traj[t].reward;
        rho_raw(t) = std::exp(log_pi(t) - traj[t].behavior_log_likelihood);
        terminal[t] = traj[t].terminal ? 1 : 0;
        // Within a fragment the successor observation is the next row's
        // observation; only the truncated tail needs its own critic call.
        if (traj[t].terminal)
            next_values(t) = 0.0;
        else if (t == n - 1)
            next_values(t) = value_net.forward(traj[t].next_obs)(0);
        else
            next_values(t) = values(t + 1);
    }
    return vtrace_recursion(rewards, values, next_values, rho_raw, terminal, cfg.gamma,
                            cfg.rho_bar);
}

double policy_loss(double advantage, double log_ratio, double xi) {
    return std::max(0.0, xi - advantage * log_ratio);
}

double value_loss(double value_target, double v) {
    const double e = value_target - v;
    return e * e;
}

}  // namespace perch::rl
