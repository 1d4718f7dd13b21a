#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "perch/mission.hpp"
#include "perch/trainer.hpp"
#include "perch/trajectory.hpp"

namespace perch::io {

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);

/// Writes content to a temporary file in the target directory and
/// renames it into place, so the destination is never partially written.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

// --- Reference trajectories -------------------------------------------
// CSV columns: t,x,y,z,vx,vy,vz,ax,ay,az,jx,jy,jz,psi,wx,wy,wz
// A JSON sidecar (<path>.meta.json) carries dt, perch point, success,
// and the checkpoint id that produced it.

void write_trajectory(const std::filesystem::path& csv_path,
                      const traj::ReferenceTrajectory& t, const std::string& checkpoint_id);

/// Reads a trajectory CSV (and its sidecar when present; without one the
/// perch point defaults to the origin and dt is inferred from the first
/// two timestamps).
traj::ReferenceTrajectory read_trajectory(const std::filesystem::path& csv_path);

// --- Mission logs -------------------------------------------------------

void write_mission_log(const std::filesystem::path& csv_path, const msn::MissionLog& log);

// --- Training curves ----------------------------------------------------

void write_curve(const std::filesystem::path& csv_path,
                 const std::vector<rl::CurvePoint>& curve);

// --- Landing statistics -------------------------------------------------

/// Published hardware results the evaluation is compared against; shown
/// side by side in the text report, never asserted.
struct ReferenceStats {
    double mean_y_cm = -0.47, sd_y_cm = 0.2;
    double mean_z_cm = -1.74, sd_z_cm = 0.21;
    double mean_pitch_deg = 88.83, sd_pitch_deg = 0.62;
    int successes = 50, trials = 50;
};

std::string stats_json(const msn::LandingStats& st);

/// Three-row table (y offset, z offset, pitch) with mean and SD columns,
/// measured next to the reference values.
std::string stats_table(const msn::LandingStats& st, const ReferenceStats& ref = {});

void write_stats(const std::filesystem::path& json_path,
                 const std::filesystem::path& txt_path, const msn::LandingStats& st);

}  // namespace perch::io
