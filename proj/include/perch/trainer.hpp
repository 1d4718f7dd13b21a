#pragma once

#include <functional>
#include <vector>

#include "perch/dynamics.hpp"
#include "perch/policy.hpp"
#include "perch/vtrace.hpp"

namespace perch::rl {

/// Episodic perching environment: the agent flies toward the wall plane
/// through the perch point; an episode ends on wall contact, on leaving
/// the sanity envelope, or at the step cap (the cap is a truncation, not
/// a terminal — value targets bootstrap through it).
class PerchEnv {
  public:
    PerchEnv(QuadParams params, Vec3 perch_point, Mat3 target_attitude, RewardWeights w,
             double dt, int step_cap);

    void reset(const QuadState& s0);

    struct StepResult {
        double reward = 0.0;
        bool episode_over = false;
        bool terminal = false;  // contact or crash; false on cap truncation
        bool contact = false;
    };

    /// Applies a pre-clamp action (saturation happens inside the plant).
    StepResult step(const MotorCommand& action);

    const QuadState& state() const { return state_; }
    const Vec3& perch_point() const { return perch_point_; }
    const Mat3& target_attitude() const { return target_attitude_; }
    const QuadParams& params() const { return params_; }
    int steps() const { return steps_; }

  private:
    QuadParams params_;
    Vec3 perch_point_;
    Mat3 target_attitude_;
    RewardWeights w_;
    double dt_;
    int step_cap_;
    QuadState state_;
    int steps_ = 0;
    bool done_ = true;
};

using EnvFactory = std::function<PerchEnv()>;
using InitSampler = std::function<QuadState(RngStream&)>;

struct CurvePoint {
    int iteration = 0;
    long episodes = 0;        // cumulative episode count
    double mean_return = 0.0;  // un-discounted episode reward sum
    double policy_loss = 0.0;
    double value_loss = 0.0;
};

struct TrainResult {
    PolicyNet policy;
    MlpNet value;
    std::vector<CurvePoint> curve;
};

/// Fresh networks exactly as train() would create them for this config.
std::pair<PolicyNet, MlpNet> init_networks(const TrainConfig& cfg, const QuadParams& p);

/// Actor-critic training: collect rollouts under the current policy,
/// compute off-policy-corrected value/advantage targets over fragments,
/// and take minibatch SGD steps on the hinge policy loss and the squared
/// value loss. Deterministic for a fixed config.
TrainResult train(const EnvFactory& env_factory, const TrainConfig& cfg,
                  const InitSampler& init_sampler,
                  const std::function<void(const CurvePoint&)>& on_iteration = {});

}  // namespace perch::rl
