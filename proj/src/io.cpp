#include "perch/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

#include <json.hpp>

#include "perch/errors.hpp"

namespace perch::io {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void write_file_atomic(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
        if (ec) throw IoError("cannot create directory " + path.parent_path().string());
    }
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw IoError("cannot open " + tmp.string() + " for writing");
        f.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!f) throw IoError("short write to " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw IoError("cannot move " + tmp.string() + " into place: " + ec.message());
}

std::string read_file(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

namespace {

void append_vec3(std::string& out, const Vec3& v) {
    out += ',';
    out += format_double(v.x());
    out += ',';
    out += format_double(v.y());
    out += ',';
    out += format_double(v.z());
}

double parse_double(const std::string& field, const fs::path& path, int line, int col) {
    double v = 0.0;
    const char* b = field.data();
    const char* e = b + field.size();
    const auto res = std::from_chars(b, e, v);
    if (res.ec != std::errc{} || res.ptr != e)
        throw ParseError(path.string() + ":" + std::to_string(line) + ": field " +
                         std::to_string(col + 1) + " ('" + field + "') is not a number");
    return v;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

constexpr const char* kTrajectoryHeader = "t,x,y,z,vx,vy,vz,ax,ay,az,jx,jy,jz,psi,wx,wy,wz";

}  // namespace

void write_trajectory(const fs::path& csv_path, const traj::ReferenceTrajectory& t,
                      const std::string& checkpoint_id) {
    std::string out(kTrajectoryHeader);
    out += '\n';
    for (const traj::TrajectorySample& s : t.samples) {
        out += format_double(s.t);
        append_vec3(out, s.x_ref);
        append_vec3(out, s.v_ref);
        append_vec3(out, s.a_ref);
        append_vec3(out, s.jerk_ref);
        out += ',';
        out += format_double(s.psi_ref);
        append_vec3(out, s.omega_ref);
        out += '\n';
    }
    write_file_atomic(csv_path, out);

    json meta;
    meta["dt"] = t.dt_ref;
    meta["perch_point"] = {t.perch_point.x(), t.perch_point.y(), t.perch_point.z()};
    meta["success"] = t.success;
    meta["samples"] = t.samples.size();
    meta["checkpoint_id"] = checkpoint_id;
    write_file_atomic(csv_path.string() + ".meta.json", meta.dump(2) + "\n");
}

traj::ReferenceTrajectory read_trajectory(const fs::path& csv_path) {
    const std::string content = read_file(csv_path);
    std::istringstream in(content);
    std::string line;
    if (!std::getline(in, line))
        throw ParseError(csv_path.string() + ":1: empty trajectory file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kTrajectoryHeader)
        throw ParseError(csv_path.string() + ":1: unexpected header '" + line + "'");

    traj::ReferenceTrajectory t;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> f = split_csv(line);
        if (f.size() != 17)
            throw ParseError(csv_path.string() + ":" + std::to_string(lineno) +
                             ": expected 17 fields, got " + std::to_string(f.size()));
        auto num = [&](int i) { return parse_double(f[i], csv_path, lineno, i); };
        traj::TrajectorySample s;
        s.t = num(0);
        s.x_ref = Vec3(num(1), num(2), num(3));
        s.v_ref = Vec3(num(4), num(5), num(6));
        s.a_ref = Vec3(num(7), num(8), num(9));
        s.jerk_ref = Vec3(num(10), num(11), num(12));
        s.psi_ref = num(13);
        s.omega_ref = Vec3(num(14), num(15), num(16));
        t.samples.push_back(s);
    }
    if (t.samples.size() < 2)
        throw ParseError(csv_path.string() + ": trajectory needs at least 2 samples");

    const fs::path meta_path = csv_path.string() + ".meta.json";
    if (fs::exists(meta_path)) {
        json meta;
        try {
            meta = json::parse(read_file(meta_path));
        } catch (const json::exception& e) {
            throw ParseError(meta_path.string() + ": " + e.what());
        }
        t.dt_ref = meta.at("dt").get<double>();
        const auto pp = meta.at("perch_point");
        t.perch_point = Vec3(pp.at(0).get<double>(), pp.at(1).get<double>(),
                             pp.at(2).get<double>());
        t.success = meta.at("success").get<bool>();
    } else {
        t.dt_ref = t.samples[1].t - t.samples[0].t;
        t.perch_point = Vec3::Zero();
        t.success = true;
        if (!(t.dt_ref > 0.0))
            throw ParseError(csv_path.string() + ": timestamps must be increasing");
    }
    return t;
}

void write_mission_log(const fs::path& csv_path, const msn::MissionLog& log) {
    std::string out =
        "t,stage,x,y,z,vx,vy,vz,wx,wy,wz,"
        "r00,r01,r02,r10,r11,r12,r20,r21,r22,"
        "cmd1,cmd2,cmd3,cmd4,"
        "ref_x,ref_y,ref_z,ref_vx,ref_vy,ref_vz,ref_psi,"
        "acx,acy,acz,tc,"
        "rc00,rc01,rc02,rc10,rc11,rc12,rc20,rc21,rc22\n";
    for (const msn::MissionStepRecord& r : log.steps) {
        out += format_double(r.t);
        out += ',';
        out += std::to_string(r.stage);
        append_vec3(out, r.state.x);
        append_vec3(out, r.state.v);
        append_vec3(out, r.state.omega);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                out += ',';
                out += format_double(r.state.r(i, j));
            }
        for (int i = 0; i < 4; ++i) {
            out += ',';
            out += format_double(r.cmd.thrust(i));
        }
        append_vec3(out, r.ref.x_ref);
        append_vec3(out, r.ref.v_ref);
        out += ',';
        out += format_double(r.ref.psi_ref);
        append_vec3(out, r.a_c);
        out += ',';
        out += format_double(r.t_c);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                out += ',';
                out += format_double(r.r_c(i, j));
            }
        out += '\n';
    }
    write_file_atomic(csv_path, out);

    json meta;
    meta["success"] = log.success;
    meta["steps"] = log.steps.size();
    if (log.contact) {
        meta["contact"] = {{"t", log.contact->t},
                           {"y_offset_m", log.contact->y_offset},
                           {"z_offset_m", log.contact->z_offset},
                           {"pitch_rad", log.contact->pitch},
                           {"pitch_deg", log.contact->pitch * 180.0 / kPi}};
    } else {
        meta["contact"] = nullptr;
    }
    write_file_atomic(csv_path.string() + ".meta.json", meta.dump(2) + "\n");
}

void write_curve(const fs::path& csv_path, const std::vector<rl::CurvePoint>& curve) {
    std::string out = "iteration,episodes,mean_return,policy_loss,value_loss\n";
    for (const rl::CurvePoint& p : curve) {
        out += std::to_string(p.iteration);
        out += ',';
        out += std::to_string(p.episodes);
        out += ',';
        out += format_double(p.mean_return);
        out += ',';
        out += format_double(p.policy_loss);
        out += ',';
        out += format_double(p.value_loss);
        out += '\n';
    }
    write_file_atomic(csv_path, out);
}

std::string stats_json(const msn::LandingStats& st) {
    json j;
    j["trials"] = st.trials;
    j["contacts"] = st.contacts;
    j["successes"] = st.successes;
    j["success_rate"] = st.success_rate;
    j["y_offset_cm"] = {{"mean", st.mean_y_cm}, {"sd", st.sd_y_cm}};
    j["z_offset_cm"] = {{"mean", st.mean_z_cm}, {"sd", st.sd_z_cm}};
    j["pitch_deg"] = {{"mean", st.mean_pitch_deg}, {"sd", st.sd_pitch_deg}};
    return j.dump(2) + "\n";
}

namespace {
std::string fixed2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}
}  // namespace

std::string stats_table(const msn::LandingStats& st, const ReferenceStats& ref) {
    std::ostringstream out;
    auto row = [&](const std::string& label, double m, double sd, double rm, double rsd) {
        out << label;
        for (std::size_t i = label.size(); i < 22; ++i) out << ' ';
        std::string cells[4] = {fixed2(m), fixed2(sd), fixed2(rm), fixed2(rsd)};
        for (const std::string& c : cells) {
            for (std::size_t i = c.size(); i < 12; ++i) out << ' ';
            out << c;
        }
        out << '\n';
    };
    out << "Landing statistics at wall contact (" << st.contacts << " contacts / "
        << st.trials << " trials)\n";
    out << "                              mean          SD    ref mean      ref SD\n";
    row("y-axis offset (cm)", st.mean_y_cm, st.sd_y_cm, ref.mean_y_cm, ref.sd_y_cm);
    row("z-axis offset (cm)", st.mean_z_cm, st.sd_z_cm, ref.mean_z_cm, ref.sd_z_cm);
    row("pitch angle (deg)", st.mean_pitch_deg, st.sd_pitch_deg, ref.mean_pitch_deg,
        ref.sd_pitch_deg);
    out << "success: " << st.successes << "/" << st.trials << " ("
        << fixed2(100.0 * st.success_rate) << "%)    reference: " << ref.successes << "/"
        << ref.trials << " (100.00%)\n";
    return out.str();
}

void write_stats(const fs::path& json_path, const fs::path& txt_path,
                 const msn::LandingStats& st) {
    write_file_atomic(json_path, stats_json(st));
    write_file_atomic(txt_path, stats_table(st));
}

}  // namespace perch::io
