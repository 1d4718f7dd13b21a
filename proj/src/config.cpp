#include "perch/config.hpp"

#include <cmath>
#include <set>

#include <json.hpp>

#include "perch/errors.hpp"
#include "perch/io.hpp"

namespace perch::io {

using nlohmann::json;
using ordered = nlohmann::ordered_json;

namespace {

constexpr double kDegToRad = kPi / 180.0;

[[noreturn]] void fail(const std::string& origin, const std::string& what) {
    throw ParseError(origin + ": " + what);
}

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& origin, const std::string& section) {
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& item : j.items()) {
        if (!ok.count(item.key()))
            fail(origin, "unknown key '" + (section.empty() ? item.key()
                                                            : section + "." + item.key()) +
                             "'");
    }
}

const json* field(const json& j, const char* key) {
    const auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
}

void num(const json& j, const char* key, double& v, const std::string& origin,
         const std::string& section) {
    if (const json* f = field(j, key)) {
        if (!f->is_number()) fail(origin, section + "." + key + " must be a number");
        v = f->get<double>();
    }
}

void num(const json& j, const char* key, int& v, const std::string& origin,
         const std::string& section) {
    if (const json* f = field(j, key)) {
        if (!f->is_number_integer()) fail(origin, section + "." + key + " must be an integer");
        v = f->get<int>();
    }
}

void num(const json& j, const char* key, std::uint64_t& v, const std::string& origin,
         const std::string& section) {
    if (const json* f = field(j, key)) {
        if (!f->is_number_unsigned())
            fail(origin, section + "." + key + " must be a non-negative integer");
        v = f->get<std::uint64_t>();
    }
}

void vec3(const json& j, const char* key, Vec3& v, const std::string& origin,
          const std::string& section) {
    if (const json* f = field(j, key)) {
        if (f->is_number()) {  // scalar broadcasts to all three axes
            v.setConstant(f->get<double>());
            return;
        }
        if (!f->is_array() || f->size() != 3 || !(*f)[0].is_number() ||
            !(*f)[1].is_number() || !(*f)[2].is_number())
            fail(origin, section + "." + key + " must be a number or an array of 3 numbers");
        v = Vec3((*f)[0].get<double>(), (*f)[1].get<double>(), (*f)[2].get<double>());
    }
}

void int_list(const json& j, const char* key, std::vector<int>& v, const std::string& origin,
              const std::string& section) {
    if (const json* f = field(j, key)) {
        if (!f->is_array() || f->empty())
            fail(origin, section + "." + key + " must be a non-empty array of integers");
        std::vector<int> out;
        for (const auto& e : *f) {
            if (!e.is_number_integer())
                fail(origin, section + "." + key + " must contain integers only");
            out.push_back(e.get<int>());
        }
        v = std::move(out);
    }
}

ordered to_json_vec3(const Vec3& v) { return ordered::array({v.x(), v.y(), v.z()}); }

}  // namespace

void ToolkitConfig::validate() const {
    quad.validate();
    train.validate();
    gains.validate();
    attitude_switch.validate();
    stage_three.validate();
    mission.validate();
    if (!(rollout.dt > 0.0 && rollout.dt <= 0.01))
        throw ValidationError("rollout: dt must be in (0, 0.01]");
    if (rollout.step_cap < 1) throw ValidationError("rollout: step cap must be >= 1");
    if (!(rollout.tol.plane > 0.0 && rollout.tol.lateral > 0.0 && rollout.tol.pitch > 0.0))
        throw ValidationError("rollout: tolerances must be positive");
    if (!(success_tol.lateral > 0.0 && success_tol.pitch > 0.0))
        throw ValidationError("success: tolerances must be positive");
    if (output_dir.empty()) throw ValidationError("output_dir must not be empty");
}

void ToolkitConfig::propagate_seed() {
    train.seed = seed;
    mission.seed = seed;
}

ToolkitConfig parse_config(const std::string& text, const std::string& origin) {
    ToolkitConfig c;

    // Whitespace-only input means "all defaults".
    const bool blank = text.find_first_not_of(" \t\r\n") == std::string::npos;
    if (!blank) {
        json j;
        try {
            j = json::parse(text);
        } catch (const json::parse_error& e) {
            throw ParseError(origin + ": " + e.what());
        }
        if (!j.is_object()) fail(origin, "top level must be a JSON object");
        check_keys(j,
                   {"seed", "output_dir", "quad", "train", "gains", "attitude_switch",
                    "stage_three", "mission", "rollout", "success"},
                   origin, "");

        num(j, "seed", c.seed, origin, "");
        if (const json* f = field(j, "output_dir")) {
            if (!f->is_string()) fail(origin, "output_dir must be a string");
            c.output_dir = f->get<std::string>();
        }

        if (const json* q = field(j, "quad")) {
            check_keys(*q,
                       {"mass", "inertia_diag", "arm_length", "k_f", "k_m", "gravity",
                        "thrust_min", "thrust_max"},
                       origin, "quad");
            num(*q, "mass", c.quad.mass, origin, "quad");
            Vec3 inertia_diag = c.quad.inertia.diagonal();
            vec3(*q, "inertia_diag", inertia_diag, origin, "quad");
            c.quad.inertia = inertia_diag.asDiagonal();
            num(*q, "arm_length", c.quad.arm_length, origin, "quad");
            num(*q, "k_f", c.quad.k_f, origin, "quad");
            num(*q, "k_m", c.quad.k_m, origin, "quad");
            vec3(*q, "gravity", c.quad.gravity, origin, "quad");
            num(*q, "thrust_min", c.quad.thrust_min, origin, "quad");
            num(*q, "thrust_max", c.quad.thrust_max, origin, "quad");
        }

        if (const json* t = field(j, "train")) {
            check_keys(*t,
                       {"gamma", "xi", "rho_bar", "lr_policy", "lr_value", "momentum",
                        "episode_cap_steps", "w1", "w2", "w3", "iterations",
                        "episodes_per_iter", "epochs", "minibatch", "vtrace_horizon",
                        "value_scale", "value_warmup_iters", "hidden"},
                       origin, "train");
            num(*t, "gamma", c.train.gamma, origin, "train");
            num(*t, "xi", c.train.xi, origin, "train");
            num(*t, "rho_bar", c.train.rho_bar, origin, "train");
            num(*t, "lr_policy", c.train.lr_policy, origin, "train");
            num(*t, "lr_value", c.train.lr_value, origin, "train");
            num(*t, "momentum", c.train.momentum, origin, "train");
            num(*t, "episode_cap_steps", c.train.episode_cap_steps, origin, "train");
            num(*t, "w1", c.train.reward_w.w1, origin, "train");
            num(*t, "w2", c.train.reward_w.w2, origin, "train");
            num(*t, "w3", c.train.reward_w.w3, origin, "train");
            num(*t, "iterations", c.train.iterations, origin, "train");
            num(*t, "episodes_per_iter", c.train.episodes_per_iter, origin, "train");
            num(*t, "epochs", c.train.epochs, origin, "train");
            num(*t, "minibatch", c.train.minibatch, origin, "train");
            num(*t, "vtrace_horizon", c.train.vtrace_horizon, origin, "train");
            num(*t, "value_scale", c.train.value_scale, origin, "train");
            num(*t, "value_warmup_iters", c.train.value_warmup_iters, origin, "train");
            int_list(*t, "hidden", c.train.hidden, origin, "train");
        }

        if (const json* g = field(j, "gains")) {
            check_keys(*g, {"kx", "kv", "kr", "kp", "ki", "kd"}, origin, "gains");
            vec3(*g, "kx", c.gains.kx, origin, "gains");
            vec3(*g, "kv", c.gains.kv, origin, "gains");
            vec3(*g, "kr", c.gains.kr, origin, "gains");
            vec3(*g, "kp", c.gains.kp, origin, "gains");
            vec3(*g, "ki", c.gains.ki, origin, "gains");
            vec3(*g, "kd", c.gains.kd, origin, "gains");
        }

        if (const json* a = field(j, "attitude_switch")) {
            check_keys(*a, {"epsilon", "perch_pitch_deg"}, origin, "attitude_switch");
            num(*a, "epsilon", c.attitude_switch.epsilon, origin, "attitude_switch");
            num(*a, "perch_pitch_deg", c.perch_pitch_deg, origin, "attitude_switch");
        }

        if (const json* s = field(j, "stage_three")) {
            check_keys(*s, {"terminal_thrust", "decay_time"}, origin, "stage_three");
            num(*s, "terminal_thrust", c.stage_three.terminal_thrust, origin, "stage_three");
            num(*s, "decay_time", c.stage_three.decay_time, origin, "stage_three");
        }

        if (const json* m = field(j, "mission")) {
            check_keys(*m,
                       {"perch_point", "box_center", "box_size", "v0_min", "v0_max",
                        "trial_count", "control_rate_hz", "timeout_s"},
                       origin, "mission");
            vec3(*m, "perch_point", c.mission.perch_point, origin, "mission");
            vec3(*m, "box_center", c.mission.box_center, origin, "mission");
            vec3(*m, "box_size", c.mission.box_size, origin, "mission");
            vec3(*m, "v0_min", c.mission.v0_min, origin, "mission");
            vec3(*m, "v0_max", c.mission.v0_max, origin, "mission");
            num(*m, "trial_count", c.mission.trial_count, origin, "mission");
            num(*m, "control_rate_hz", c.mission.control_rate_hz, origin, "mission");
            num(*m, "timeout_s", c.mission.timeout_s, origin, "mission");
        }

        if (const json* r = field(j, "rollout")) {
            check_keys(*r, {"dt", "step_cap", "tol_plane", "tol_lateral", "tol_pitch_deg"},
                       origin, "rollout");
            num(*r, "dt", c.rollout.dt, origin, "rollout");
            num(*r, "step_cap", c.rollout.step_cap, origin, "rollout");
            num(*r, "tol_plane", c.rollout.tol.plane, origin, "rollout");
            num(*r, "tol_lateral", c.rollout.tol.lateral, origin, "rollout");
            num(*r, "tol_pitch_deg", c.rollout_tol_pitch_deg, origin, "rollout");
        }

        if (const json* s = field(j, "success")) {
            check_keys(*s, {"lateral", "pitch_deg"}, origin, "success");
            num(*s, "lateral", c.success_tol.lateral, origin, "success");
            num(*s, "pitch_deg", c.success_pitch_deg, origin, "success");
        }
    }

    c.attitude_switch.perch_attitude = rot_y(c.perch_pitch_deg * kDegToRad);
    c.rollout.tol.pitch = c.rollout_tol_pitch_deg * kDegToRad;
    c.success_tol.pitch = c.success_pitch_deg * kDegToRad;
    c.propagate_seed();
    try {
        c.validate();
    } catch (const ValidationError& e) {
        throw ValidationError(origin + ": " + e.what());
    }
    return c;
}

ToolkitConfig load_config(const std::filesystem::path& path) {
    return parse_config(read_file(path), path.string());
}

std::string serialize_config(const ToolkitConfig& c) {
    ordered j;
    j["seed"] = c.seed;
    j["output_dir"] = c.output_dir;

    ordered& q = j["quad"];
    q["mass"] = c.quad.mass;
    q["inertia_diag"] = to_json_vec3(c.quad.inertia.diagonal());
    q["arm_length"] = c.quad.arm_length;
    q["k_f"] = c.quad.k_f;
    q["k_m"] = c.quad.k_m;
    q["gravity"] = to_json_vec3(c.quad.gravity);
    q["thrust_min"] = c.quad.thrust_min;
    q["thrust_max"] = c.quad.thrust_max;

    ordered& t = j["train"];
    t["gamma"] = c.train.gamma;
    t["xi"] = c.train.xi;
    t["rho_bar"] = c.train.rho_bar;
    t["lr_policy"] = c.train.lr_policy;
    t["lr_value"] = c.train.lr_value;
    t["momentum"] = c.train.momentum;
    t["episode_cap_steps"] = c.train.episode_cap_steps;
    t["w1"] = c.train.reward_w.w1;
    t["w2"] = c.train.reward_w.w2;
    t["w3"] = c.train.reward_w.w3;
    t["iterations"] = c.train.iterations;
    t["episodes_per_iter"] = c.train.episodes_per_iter;
    t["epochs"] = c.train.epochs;
    t["minibatch"] = c.train.minibatch;
    t["vtrace_horizon"] = c.train.vtrace_horizon;
    t["value_scale"] = c.train.value_scale;
    t["value_warmup_iters"] = c.train.value_warmup_iters;
    t["hidden"] = c.train.hidden;

    ordered& g = j["gains"];
    g["kx"] = to_json_vec3(c.gains.kx);
    g["kv"] = to_json_vec3(c.gains.kv);
    g["kr"] = to_json_vec3(c.gains.kr);
    g["kp"] = to_json_vec3(c.gains.kp);
    g["ki"] = to_json_vec3(c.gains.ki);
    g["kd"] = to_json_vec3(c.gains.kd);

    ordered& a = j["attitude_switch"];
    a["epsilon"] = c.attitude_switch.epsilon;
    a["perch_pitch_deg"] = c.perch_pitch_deg;

    ordered& s3 = j["stage_three"];
    s3["terminal_thrust"] = c.stage_three.terminal_thrust;
    s3["decay_time"] = c.stage_three.decay_time;

    ordered& m = j["mission"];
    m["perch_point"] = to_json_vec3(c.mission.perch_point);
    m["box_center"] = to_json_vec3(c.mission.box_center);
    m["box_size"] = to_json_vec3(c.mission.box_size);
    m["v0_min"] = to_json_vec3(c.mission.v0_min);
    m["v0_max"] = to_json_vec3(c.mission.v0_max);
    m["trial_count"] = c.mission.trial_count;
    m["control_rate_hz"] = c.mission.control_rate_hz;
    m["timeout_s"] = c.mission.timeout_s;

    ordered& r = j["rollout"];
    r["dt"] = c.rollout.dt;
    r["step_cap"] = c.rollout.step_cap;
    r["tol_plane"] = c.rollout.tol.plane;
    r["tol_lateral"] = c.rollout.tol.lateral;
    r["tol_pitch_deg"] = c.rollout_tol_pitch_deg;

    ordered& s = j["success"];
    s["lateral"] = c.success_tol.lateral;
    s["pitch_deg"] = c.success_pitch_deg;

    return j.dump(2) + "\n";
}

}  // namespace perch::io
