#include "perch/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "perch/errors.hpp"

namespace perch::rl {

PerchEnv::PerchEnv(QuadParams params, Vec3 perch_point, Mat3 target_attitude, RewardWeights w,
                   double dt, int step_cap)
    : params_(std::move(params)),
      perch_point_(std::move(perch_point)),
      target_attitude_(std::move(target_attitude)),
      w_(w),
      dt_(dt),
      step_cap_(step_cap) {
    params_.validate();
    if (!is_rotation(target_attitude_)) throw ValidationError("env: invalid target attitude");
    if (!(dt_ > 0.0)) throw ValidationError("env: dt must be positive");
    if (step_cap_ < 1) throw ValidationError("env: step cap must be >= 1");
}

void PerchEnv::reset(const QuadState& s0) {
    if (!s0.within_sanity_bounds() || !is_rotation(s0.r))
        throw ValidationError("env: invalid initial state");
    state_ = s0;
    steps_ = 0;
    done_ = false;
}

PerchEnv::StepResult PerchEnv::step(const MotorCommand& action) {
    if (done_) throw ValidationError("env: step on a finished episode");

    StepResult res;
    res.reward = reward(state_, action.clamped(params_), perch_point_, target_attitude_, w_);

    bool crashed = false;
    try {
        state_ = perch::step(state_, action, dt_, params_);
    } catch (const SimulationDiverged&) {
        crashed = true;  // state stays at the last valid sample
    }
    ++steps_;

    res.contact = !crashed && (state_.x.x() - perch_point_.x()) <= 0.0;
    res.terminal = crashed || res.contact;
    res.episode_over = res.terminal || steps_ >= step_cap_;
    done_ = res.episode_over;
    return res;
}

std::pair<PolicyNet, MlpNet> init_networks(const TrainConfig& cfg, const QuadParams& p) {
    RngStream policy_rng(cfg.seed, 1);
    RngStream value_rng(cfg.seed, 2);
    PolicyNet policy = PolicyNet::init(cfg.hidden, p, policy_rng);
    MlpSpec vspec;
    vspec.n_in = kObsDim;
    vspec.hidden = cfg.hidden;
    vspec.n_out = 1;
    vspec.output_scale = cfg.value_scale;
    return {std::move(policy), MlpNet::glorot(std::move(vspec), value_rng)};
}

namespace {

// Deterministic Fisher-Yates permutation.
std::vector<int> shuffled_indices(int n, RngStream& rng) {
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = n - 1; i > 0; --i) {
        const int j = std::min(i, static_cast<int>(rng.uniform() * (i + 1)));
        std::swap(idx[i], idx[j]);
    }
    return idx;
}

struct Batch {
    Eigen::MatrixXd obs;
    Eigen::MatrixXd actions;
    Eigen::VectorXd behavior_ll;
    Eigen::VectorXd advantage;
    Eigen::VectorXd value_target;
};

// Cap the global gradient norm. Advantages enter the hinge gradient at the
// raw return scale, so a minibatch that catches a string of correlated
// fragments can spike the gradient a few orders of magnitude above typical;
// rescaling (rather than element clipping) keeps the direction intact.
constexpr double kGradClipNorm = 10.0;

void clip_global_norm(std::vector<double>& grad) {
    double sq = 0.0;
    for (double g : grad) sq += g * g;
    const double norm = std::sqrt(sq);
    if (norm <= kGradClipNorm) return;
    const double s = kGradClipNorm / norm;
    for (double& g : grad) g *= s;
}

Batch gather(const std::vector<Transition>& data, const Eigen::VectorXd& adv,
             const Eigen::VectorXd& vtarget, const std::vector<int>& order, int begin,
             int count) {
    Batch b;
    b.obs.resize(kObsDim, count);
    b.actions.resize(kActDim, count);
    b.behavior_ll.resize(count);
    b.advantage.resize(count);
    b.value_target.resize(count);
    for (int k = 0; k < count; ++k) {
        const int i = order[begin + k];
        b.obs.col(k) = data[i].obs;
        b.actions.col(k) = data[i].action;
        b.behavior_ll(k) = data[i].behavior_log_likelihood;
        b.advantage(k) = adv(i);
        b.value_target(k) = vtarget(i);
    }
    return b;
}

}  // namespace

TrainResult train(const EnvFactory& env_factory, const TrainConfig& cfg,
                  const InitSampler& init_sampler,
                  const std::function<void(const CurvePoint&)>& on_iteration) {
    cfg.validate();
    PerchEnv env = env_factory();
    auto [policy, value_net] = init_networks(cfg, env.params());

    SgdMomentum opt_pi(cfg.lr_policy, cfg.momentum, policy.net.spec().param_count());
    SgdMomentum opt_v(cfg.lr_value, cfg.momentum, value_net.spec().param_count());
    std::vector<double> grad_pi(policy.net.spec().param_count());
    std::vector<double> grad_v(value_net.spec().param_count());

    RngStream shuffle_rng(cfg.seed, 3);
    long episode_counter = 0;

    TrainResult result{std::move(policy), std::move(value_net), {}};

    for (int iter = 0; iter < cfg.iterations; ++iter) {
        // --- Collect rollouts under the current policy (the behavior
        // policy for this iteration's updates).
        std::vector<Transition> data;
        std::vector<std::pair<int, int>> fragments;  // [begin, end) index ranges
        double return_sum = 0.0;

        for (int e = 0; e < cfg.episodes_per_iter; ++e) {
            RngStream ep_rng(cfg.seed, 1000 + static_cast<std::uint64_t>(episode_counter));
            ++episode_counter;
            env.reset(init_sampler(ep_rng));

            int frag_begin = static_cast<int>(data.size());
            while (true) {
                Transition tr;
                tr.obs = observe(env.state(), env.perch_point());
                const GaussianPolicySample s = policy_act(result.policy, tr.obs, ep_rng);
                const PerchEnv::StepResult sr = env.step(s.action);
                tr.action = s.action.thrust;
                tr.reward = sr.reward;
                tr.next_obs = observe(env.state(), env.perch_point());
                tr.behavior_log_likelihood = s.log_likelihood;
                tr.terminal = sr.terminal;
                data.push_back(std::move(tr));
                return_sum += sr.reward;

                const int size = static_cast<int>(data.size());
                if (sr.episode_over || size - frag_begin == cfg.vtrace_horizon) {
                    fragments.emplace_back(frag_begin, size);
                    frag_begin = size;
                    if (sr.episode_over) break;
                }
            }
        }

        CurvePoint pt;
        pt.iteration = iter;
        pt.episodes = episode_counter;
        pt.mean_return = return_sum / cfg.episodes_per_iter;
        if (!std::isfinite(pt.mean_return))
            throw DivergedTraining("mean episode return is not finite at iteration " +
                                   std::to_string(iter));

        // --- Gradient passes.
        const int n = static_cast<int>(data.size());
        double pol_loss_sum = 0.0;
        double val_loss_sum = 0.0;
        long batches = 0;

        for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
            // Targets from the current networks, fragment by fragment.
            Eigen::VectorXd adv(n);
            Eigen::VectorXd vtarget(n);
            for (const auto& [b, e] : fragments) {
                const VtraceResult vt = vtrace_targets(
                    std::span<const Transition>(data.data() + b, e - b), result.value,
                    result.policy, cfg);
                adv.segment(b, e - b) = vt.advantage;
                vtarget.segment(b, e - b) = vt.value_target;
            }

            const std::vector<int> order = shuffled_indices(n, shuffle_rng);
            for (int begin = 0; begin < n; begin += cfg.minibatch) {
                const int count = std::min(cfg.minibatch, n - begin);
                const Batch b = gather(data, adv, vtarget, order, begin, count);

                // Critic: squared error against fixed targets, in units of
                // value_scale. Returns run to the hundreds, so regressing the
                // raw error through the scaled output head would multiply the
                // gradient by the scale twice and blow past the stable step
                // size; normalizing keeps the error surface O(1).
                MlpNet::Tape tape_v;
                const Eigen::MatrixXd v = result.value.forward_batch(b.obs, &tape_v);
                const Eigen::VectorXd verr =
                    (v.row(0).transpose() - b.value_target) / cfg.value_scale;
                val_loss_sum += verr.squaredNorm() / count;
                const Eigen::MatrixXd dv =
                    (2.0 / (count * cfg.value_scale)) * verr.transpose();
                std::fill(grad_v.begin(), grad_v.end(), 0.0);
                result.value.backward_batch(tape_v, dv, grad_v);
                clip_global_norm(grad_v);
                opt_v.step(result.value, grad_v);

                // Actor: hinge loss on advantage-weighted likelihood ratio.
                MlpNet::Tape tape_pi;
                const Eigen::MatrixXd heads = result.policy.net.forward_batch(b.obs, &tape_pi);
                const Eigen::VectorXd log_pi =
                    log_prob(split_heads(heads, result.policy.scale), b.actions);
                const Eigen::VectorXd log_ratio = log_pi - b.behavior_ll;

                Eigen::VectorXd weight(count);
                double loss = 0.0;
                for (int k = 0; k < count; ++k) {
                    const double margin = cfg.xi - b.advantage(k) * log_ratio(k);
                    loss += std::max(0.0, margin);
                    weight(k) = margin > 0.0 ? -b.advantage(k) / count : 0.0;
                }
                pol_loss_sum += loss / count;
                ++batches;

                if (iter >= cfg.value_warmup_iters && cfg.lr_policy > 0.0) {
                    const Eigen::MatrixXd dheads = log_prob_grad_heads(
                        heads, result.policy.scale, b.actions, weight);
                    std::fill(grad_pi.begin(), grad_pi.end(), 0.0);
                    result.policy.net.backward_batch(tape_pi, dheads, grad_pi);
                    clip_global_norm(grad_pi);
                    opt_pi.step(result.policy.net, grad_pi);
                }
            }
        }

        pt.policy_loss = pol_loss_sum / batches;
        pt.value_loss = val_loss_sum / batches;
        if (!std::isfinite(pt.policy_loss) || !std::isfinite(pt.value_loss))
            throw DivergedTraining("loss is not finite at iteration " + std::to_string(iter));

        result.curve.push_back(pt);
        if (on_iteration) on_iteration(pt);
    }
    return result;
}

}  // namespace perch::rl
