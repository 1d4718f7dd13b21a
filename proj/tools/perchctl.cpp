#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "perch/checkpoint.hpp"
#include "perch/config.hpp"
#include "perch/controller.hpp"
#include "perch/errors.hpp"
#include "perch/io.hpp"
#include "perch/mission.hpp"
#include "perch/trainer.hpp"
#include "perch/trajectory.hpp"

namespace fs = std::filesystem;
using namespace perch;

namespace {

struct GlobalOpts {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
};

io::ToolkitConfig resolve_config(const GlobalOpts& g) {
    io::ToolkitConfig cfg = g.config_path.empty()
                                ? io::parse_config("", "<defaults>")
                                : io::load_config(g.config_path);
    if (g.seed) {
        cfg.seed = *g.seed;
        cfg.propagate_seed();
    }
    if (g.out_dir) cfg.output_dir = *g.out_dir;
    return cfg;
}

// Hash of the experiment setup. The output directory is where results are
// written, not part of the experiment, so it is canonicalized away: the same
// training run must produce the same checkpoint no matter where it lands.
std::uint64_t config_hash_of(io::ToolkitConfig cfg) {
    cfg.output_dir = io::ToolkitConfig{}.output_dir;
    return io::fnv1a(io::serialize_config(cfg));
}

msn::MissionSetup setup_of(const io::ToolkitConfig& cfg) {
    msn::MissionSetup s;
    s.params = cfg.quad;
    s.gains = cfg.gains;
    s.attitude_switch = cfg.attitude_switch;
    s.stage_three = cfg.stage_three;
    s.mission = cfg.mission;
    s.rollout = cfg.rollout;
    s.rollout.perch_point = cfg.mission.perch_point;
    s.success_tol = cfg.success_tol;
    return s;
}

QuadState parse_state(const std::string& text) {
    std::vector<double> v;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            v.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw ParseError("--state: '" + tok + "' is not a number");
        }
    }
    if (v.size() != 6)
        throw ParseError("--state needs 6 comma-separated numbers: x,y,z,vx,vy,vz");
    QuadState s;
    s.x = Vec3(v[0], v[1], v[2]);
    s.v = Vec3(v[3], v[4], v[5]);
    return s;
}

QuadState initial_state(const io::ToolkitConfig& cfg, const std::string& state_text,
                        std::uint64_t init_seed) {
    if (!state_text.empty()) return parse_state(state_text);
    return msn::sample_initial_state(cfg.mission, init_seed);
}

rl::PolicyNet load_policy(const std::string& path) {
    return io::policy_from(io::load_checkpoint(path));
}

std::string checkpoint_id(const io::Checkpoint& c) {
    std::ostringstream ss;
    ss << "seed" << c.seed << "-iter" << c.iteration << "-" << std::hex << c.config_hash;
    return ss.str();
}

int cmd_train(const io::ToolkitConfig& cfg, const std::string& checkpoint_out) {
    rl::EnvFactory env_factory = [&cfg] {
        return rl::PerchEnv(cfg.quad, cfg.mission.perch_point,
                            cfg.attitude_switch.perch_attitude, cfg.train.reward_w,
                            cfg.rollout.dt, cfg.train.episode_cap_steps);
    };
    const msn::MissionConfig& m = cfg.mission;
    rl::InitSampler init_sampler = [&m](RngStream& rng) {
        QuadState s;
        for (int i = 0; i < 3; ++i) {
            const double half = 0.5 * m.box_size(i);
            s.x(i) = rng.uniform(m.box_center(i) - half, m.box_center(i) + half);
        }
        for (int i = 0; i < 3; ++i) s.v(i) = rng.uniform(m.v0_min(i), m.v0_max(i));
        return s;
    };

    const std::uint64_t hash = config_hash_of(cfg);
    const fs::path out_dir(cfg.output_dir);
    const fs::path ckpt_path =
        checkpoint_out.empty() ? out_dir / "checkpoint.bin" : fs::path(checkpoint_out);

    std::cout << "training: " << cfg.train.iterations << " iterations, "
              << cfg.train.episodes_per_iter << " episodes each, seed " << cfg.train.seed
              << "\n";
    const rl::TrainResult result = rl::train(
        env_factory, cfg.train, init_sampler, [&](const rl::CurvePoint& pt) {
            std::cout << "iter " << pt.iteration << "  episodes " << pt.episodes
                      << "  mean_return " << io::format_double(pt.mean_return)
                      << "  policy_loss " << io::format_double(pt.policy_loss)
                      << "  value_loss " << io::format_double(pt.value_loss) << std::endl;
        });

    io::save_checkpoint(
        io::make_checkpoint(result.policy, result.value, cfg.train.seed,
                            static_cast<std::uint32_t>(cfg.train.iterations), hash),
        ckpt_path);
    io::write_curve(out_dir / "curve.csv", result.curve);
    std::cout << "checkpoint: " << ckpt_path.string() << "\ncurve: "
              << (out_dir / "curve.csv").string() << "\n";
    return 0;
}

int cmd_generate(const io::ToolkitConfig& cfg, const std::string& ckpt_path, bool analytic,
                 const std::string& state_text, std::uint64_t init_seed,
                 const std::string& out_file) {
    const QuadState s0 = initial_state(cfg, state_text, init_seed);
    const fs::path out =
        out_file.empty() ? fs::path(cfg.output_dir) / "trajectory.csv" : fs::path(out_file);

    traj::ReferenceTrajectory ref;
    std::string id;
    if (analytic) {
        traj::AnalyticPerchConfig acfg;
        acfg.dt = cfg.rollout.dt;
        acfg.perch_point = cfg.mission.perch_point;
        acfg.gravity = cfg.quad.gravity.norm();
        ref = traj::make_analytic_perch_trajectory(s0, acfg);
        id = "analytic";
    } else {
        const io::Checkpoint c = io::load_checkpoint(ckpt_path);
        const rl::PolicyNet policy = io::policy_from(c);
        traj::RolloutConfig rcfg = cfg.rollout;
        rcfg.perch_point = cfg.mission.perch_point;
        const traj::RolloutResult ro = traj::rollout(policy, s0, cfg.quad, rcfg);
        ref = traj::derive_references(ro.states, ro.actions, cfg.quad, rcfg.dt,
                                      rcfg.perch_point, ro.success);
        id = checkpoint_id(c);
    }

    io::write_trajectory(out, ref, id);
    std::cout << "trajectory: " << out.string() << "  samples " << ref.samples.size()
              << "  success " << (ref.success ? "true" : "false") << "\n";
    return 0;
}

void print_contact(const msn::MissionLog& log) {
    if (log.contact) {
        std::cout << "contact t=" << io::format_double(log.contact->t)
                  << "s  y=" << io::format_double(100.0 * log.contact->y_offset)
                  << "cm  z=" << io::format_double(100.0 * log.contact->z_offset)
                  << "cm  pitch=" << io::format_double(log.contact->pitch * 180.0 / kPi)
                  << "deg  success=" << (log.success ? "true" : "false") << "\n";
    } else {
        std::cout << "no wall contact\n";
    }
}

int cmd_fly(const io::ToolkitConfig& cfg, const std::string& ckpt_path,
            const std::string& oracle_path, const std::string& state_text,
            std::uint64_t init_seed, const std::string& out_file) {
    const auto setup = setup_of(cfg);
    const fs::path out =
        out_file.empty() ? fs::path(cfg.output_dir) / "mission.csv" : fs::path(out_file);

    msn::MissionLog log;
    if (!oracle_path.empty()) {
        const traj::ReferenceTrajectory ref = io::read_trajectory(oracle_path);
        QuadState s0;
        if (!state_text.empty()) {
            s0 = parse_state(state_text);
        } else {
            s0.x = ref.samples.front().x_ref;
            s0.v = ref.samples.front().v_ref;
        }
        log = msn::run_mission_tracking(s0, ref, setup);
    } else {
        const QuadState s0 = initial_state(cfg, state_text, init_seed);
        log = msn::run_mission(s0, load_policy(ckpt_path), setup);
    }

    io::write_mission_log(out, log);
    print_contact(log);
    std::cout << "mission log: " << out.string() << "\n";
    return 0;
}

int cmd_evaluate(const io::ToolkitConfig& cfg, const std::string& ckpt_path, int trials,
                 bool quiet) {
    auto setup = setup_of(cfg);
    if (trials > 0) setup.mission.trial_count = trials;
    const rl::PolicyNet policy = load_policy(ckpt_path);

    const msn::LandingStats stats = msn::monte_carlo(
        policy, setup, [&](int i, const msn::MissionLog& log) {
            if (quiet) return;
            std::cout << "trial " << i << ": ";
            if (log.contact)
                std::cout << "contact y=" << io::format_double(100.0 * log.contact->y_offset)
                          << "cm z=" << io::format_double(100.0 * log.contact->z_offset)
                          << "cm pitch="
                          << io::format_double(log.contact->pitch * 180.0 / kPi)
                          << "deg success=" << (log.success ? "true" : "false") << "\n";
            else
                std::cout << "no contact\n";
        });

    const fs::path out_dir(cfg.output_dir);
    io::write_stats(out_dir / "stats.json", out_dir / "stats.txt", stats);
    std::cout << io::stats_table(stats);
    std::cout << "stats: " << (out_dir / "stats.json").string() << ", "
              << (out_dir / "stats.txt").string() << "\n";
    return 0;
}

int cmd_inspect(const std::string& path) {
    const std::string head = io::read_file(path).substr(0, 8);
    if (head == "PERCHCKP") {
        std::cout << io::checkpoint_summary_json(io::load_checkpoint(path));
    } else {
        std::cout << io::serialize_config(io::load_config(path));
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"quadrotor wall-perching toolkit: train, extract, track, evaluate"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--config", g.config_path, "JSON config file (omit for defaults)");
    app.add_option("--seed", g.seed, "override the config seed");
    app.add_option("--out", g.out_dir, "override the output directory");

    auto* train = app.add_subcommand("train", "train the motor policy");
    std::string train_ckpt_out;
    train->add_option("--checkpoint-out", train_ckpt_out, "checkpoint path");

    auto* generate = app.add_subcommand("generate", "extract a reference trajectory");
    std::string gen_ckpt, gen_state, gen_out;
    std::uint64_t gen_init_seed = 0;
    bool gen_analytic = false;
    auto* gen_ckpt_opt = generate->add_option("--checkpoint", gen_ckpt, "trained policy");
    auto* gen_analytic_opt =
        generate->add_flag("--analytic", gen_analytic, "hand-designed feasible path instead");
    gen_ckpt_opt->excludes(gen_analytic_opt);
    generate->add_option("--state", gen_state, "initial state x,y,z,vx,vy,vz");
    generate->add_option("--init-seed", gen_init_seed, "sample the initial state (default 0)");
    generate->add_option("--out-file", gen_out, "trajectory CSV path");

    auto* fly = app.add_subcommand("fly", "run a full mission");
    std::string fly_ckpt, fly_oracle, fly_state, fly_out;
    std::uint64_t fly_init_seed = 0;
    auto* fly_ckpt_opt = fly->add_option("--checkpoint", fly_ckpt, "trained policy");
    auto* fly_oracle_opt = fly->add_option("--oracle-trajectory", fly_oracle,
                                           "track this trajectory CSV instead of the policy");
    fly_ckpt_opt->excludes(fly_oracle_opt);
    fly->add_option("--state", fly_state, "initial state x,y,z,vx,vy,vz");
    fly->add_option("--init-seed", fly_init_seed, "sample the initial state (default 0)");
    fly->add_option("--out-file", fly_out, "mission log CSV path");

    auto* evaluate = app.add_subcommand("evaluate", "Monte-Carlo landing statistics");
    std::string eval_ckpt;
    int eval_trials = 0;
    bool eval_quiet = false;
    evaluate->add_option("--checkpoint", eval_ckpt, "trained policy")->required();
    evaluate->add_option("--trials", eval_trials, "trial count (overrides config)");
    evaluate->add_flag("--quiet", eval_quiet, "suppress per-trial lines");

    auto* inspect = app.add_subcommand("inspect", "print checkpoint or config metadata");
    std::string inspect_path;
    inspect->add_option("path", inspect_path, "checkpoint or config file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (app.got_subcommand(train)) {
            return cmd_train(resolve_config(g), train_ckpt_out);
        }
        if (app.got_subcommand(generate)) {
            if (gen_ckpt.empty() && !gen_analytic) {
                std::cerr << "generate: either --checkpoint or --analytic is required\n";
                return 2;
            }
            return cmd_generate(resolve_config(g), gen_ckpt, gen_analytic, gen_state,
                                gen_init_seed, gen_out);
        }
        if (app.got_subcommand(fly)) {
            if (fly_ckpt.empty() && fly_oracle.empty()) {
                std::cerr << "fly: either --checkpoint or --oracle-trajectory is required\n";
                return 2;
            }
            return cmd_fly(resolve_config(g), fly_ckpt, fly_oracle, fly_state, fly_init_seed,
                           fly_out);
        }
        if (app.got_subcommand(evaluate)) {
            return cmd_evaluate(resolve_config(g), eval_ckpt, eval_trials, eval_quiet);
        }
        if (app.got_subcommand(inspect)) {
            return cmd_inspect(inspect_path);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
