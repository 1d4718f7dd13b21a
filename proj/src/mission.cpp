#include "perch/mission.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "perch/errors.hpp"

namespace perch::msn {

void MissionConfig::validate() const {
    if (!(box_size.x() >= 0.0 && box_size.y() >= 0.0 && box_size.z() >= 0.0))
        throw ValidationError("mission: box size must be non-negative");
    if (!(v0_min.x() <= v0_max.x() && v0_min.y() <= v0_max.y() && v0_min.z() <= v0_max.z()))
        throw ValidationError("mission: velocity bounds must satisfy min <= max");
    if (trial_count < 1) throw ValidationError("mission: trial count must be >= 1");
    if (!(control_rate_hz >= 100.0 && control_rate_hz <= 1000.0))
        throw ValidationError("mission: control rate must be in [100, 1000] Hz");
    if (!(timeout_s > 0.0)) throw ValidationError("mission: timeout must be positive");
}

QuadState sample_initial_state(const MissionConfig& cfg, std::uint64_t trial_seed) {
    cfg.validate();
    RngStream rng(cfg.seed, trial_seed);
    QuadState s;
    for (int i = 0; i < 3; ++i) {
        const double half = 0.5 * cfg.box_size(i);
        s.x(i) = rng.uniform(cfg.box_center(i) - half, cfg.box_center(i) + half);
    }
    for (int i = 0; i < 3; ++i) s.v(i) = rng.uniform(cfg.v0_min(i), cfg.v0_max(i));
    return s;
}

namespace {

ContactRecord interpolate_contact(const QuadState& before, const QuadState& after,
                                  double t_before, double dt, const Vec3& perch_point) {
    const double x1 = before.x.x() - perch_point.x();
    const double x2 = after.x.x() - perch_point.x();
    const double lambda = x1 / (x1 - x2);  // x1 > 0 >= x2, so lambda in (0, 1]
    ContactRecord c;
    c.t = t_before + lambda * dt;
    c.y_offset = (before.x.y() - perch_point.y()) +
                 lambda * (after.x.y() - before.x.y());
    c.z_offset = (before.x.z() - perch_point.z()) +
                 lambda * (after.x.z() - before.x.z());
    const double p1 = pitch_of(before.r);
    const double p2 = pitch_of(after.r);
    c.pitch = p1 + lambda * (p2 - p1);
    return c;
}

bool contact_success(const ContactRecord& c, const MissionTolerance& tol) {
    return std::hypot(c.y_offset, c.z_offset) <= tol.lateral &&
           std::abs(c.pitch - kHalfPi) <= tol.pitch;
}

/// Stages II-III: track the reference until wall contact. Rows get the
/// given time offset so a log that starts with Stage I stays monotone.
void fly_tracking(MissionLog& log, const QuadState& s0, const traj::ReferenceTrajectory& ref,
                  const MissionSetup& setup, double t_offset) {
    if (ref.samples.size() < 2)
        throw TooShort("mission: reference trajectory needs at least 2 samples");
    const double dt = 1.0 / setup.mission.control_rate_hz;
    ctl::TrackingCascade cascade(setup.params, setup.gains, setup.attitude_switch,
                                 setup.stage_three, dt, setup.mission.perch_point);

    QuadState state = s0;
    const int max_steps = static_cast<int>(setup.mission.timeout_s / dt);
    const int last = static_cast<int>(ref.samples.size()) - 1;

    for (int j = 0; j < max_steps; ++j) {
        const double t = j * dt;
        const int k = std::min(static_cast<int>(t / ref.dt_ref), last);
        const traj::TrajectorySample& sample = ref.samples[k];

        const ctl::TrackingCascade::Output out = cascade.control(state, sample);
        const QuadState next = step(state, out.cmd, dt, setup.params);

        MissionStepRecord rec;
        rec.t = t_offset + t;
        rec.stage = out.stage;
        rec.state = state;
        rec.cmd = out.cmd;
        rec.ref = sample;
        rec.a_c = out.a_c;
        rec.t_c = out.t_c;
        rec.r_c = out.r_c;
        log.steps.push_back(rec);

        if (next.x.x() - setup.mission.perch_point.x() <= 0.0) {
            log.contact =
                interpolate_contact(state, next, rec.t, dt, setup.mission.perch_point);
            log.success = contact_success(*log.contact, setup.success_tol);
            return;
        }
        state = next;
    }
    throw MissionTimeout("mission: no wall contact within " +
                         std::to_string(setup.mission.timeout_s) + " s of flight");
}

}  // namespace

MissionLog run_mission(const QuadState& s0, const rl::PolicyNet& policy,
                       const MissionSetup& setup) {
    setup.mission.validate();

    traj::RolloutConfig rcfg = setup.rollout;
    rcfg.perch_point = setup.mission.perch_point;
    const traj::RolloutResult ro = traj::rollout(policy, s0, setup.params, rcfg);
    const traj::ReferenceTrajectory ref = traj::derive_references(
        ro.states, ro.actions, setup.params, rcfg.dt, rcfg.perch_point, ro.success);

    MissionLog log;
    // Stage I on its own timeline: the generation rollout happens before
    // the vehicle flies, and the log time axis stays strictly increasing.
    const int n_gen = static_cast<int>(ro.actions.size());
    for (int k = 0; k < n_gen; ++k) {
        MissionStepRecord rec;
        rec.t = k * rcfg.dt;
        rec.stage = 1;
        rec.state = ro.states[k];
        rec.cmd = ro.actions[k];
        rec.ref = ref.samples[k];
        rec.a_c = ref.samples[k].a_ref;
        rec.t_c = mix_forward(ro.actions[k].clamped(setup.params), setup.params).tz;
        rec.r_c = ro.states[k].r;
        log.steps.push_back(rec);
    }

    fly_tracking(log, s0, ref, setup, n_gen * rcfg.dt);
    return log;
}

MissionLog run_mission_tracking(const QuadState& s0, const traj::ReferenceTrajectory& ref,
                                const MissionSetup& setup) {
    setup.mission.validate();
    MissionLog log;
    fly_tracking(log, s0, ref, setup, 0.0);
    return log;
}

LandingStats stats_from_contacts(const std::vector<ContactRecord>& contacts, int trials,
                                 int successes) {
    LandingStats st;
    st.trials = trials;
    st.contacts = static_cast<int>(contacts.size());
    st.successes = successes;
    st.success_rate = trials > 0 ? static_cast<double>(successes) / trials : 0.0;
    if (contacts.empty()) return st;

    const double n = static_cast<double>(contacts.size());
    double sy = 0.0, sz = 0.0, sp = 0.0;
    for (const ContactRecord& c : contacts) {
        sy += c.y_offset;
        sz += c.z_offset;
        sp += c.pitch;
    }
    const double my = sy / n, mz = sz / n, mp = sp / n;

    double vy = 0.0, vz = 0.0, vp = 0.0;
    for (const ContactRecord& c : contacts) {
        vy += (c.y_offset - my) * (c.y_offset - my);
        vz += (c.z_offset - mz) * (c.z_offset - mz);
        vp += (c.pitch - mp) * (c.pitch - mp);
    }
    const double denom = n > 1.0 ? n - 1.0 : 1.0;

    constexpr double kToCm = 100.0;
    const double to_deg = 180.0 / kPi;
    st.mean_y_cm = my * kToCm;
    st.sd_y_cm = std::sqrt(vy / denom) * kToCm;
    st.mean_z_cm = mz * kToCm;
    st.sd_z_cm = std::sqrt(vz / denom) * kToCm;
    st.mean_pitch_deg = mp * to_deg;
    st.sd_pitch_deg = std::sqrt(vp / denom) * to_deg;
    return st;
}

LandingStats monte_carlo(const rl::PolicyNet& policy, const MissionSetup& setup,
                         const std::function<void(int, const MissionLog&)>& on_trial) {
    setup.mission.validate();
    std::vector<ContactRecord> contacts;
    int successes = 0;

    for (int i = 0; i < setup.mission.trial_count; ++i) {
        const QuadState s0 =
            sample_initial_state(setup.mission, static_cast<std::uint64_t>(i));
        MissionLog log;
        try {
            log = run_mission(s0, policy, setup);
        } catch (const Error&) {
            // Divergence, timeout, or a singular command chain: the trial
            // simply fails; the evaluation carries on.
            log = MissionLog{};
        }
        if (log.contact) {
            contacts.push_back(*log.contact);
            if (log.success) ++successes;
        }
        if (on_trial) on_trial(i, log);
    }
    return stats_from_contacts(contacts, setup.mission.trial_count, successes);
}

}  // namespace perch::msn
