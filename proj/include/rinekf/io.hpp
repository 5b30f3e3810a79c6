/**
 * @file io.hpp
 * @brief Text formats for measurement logs and trajectories.
 *
 * Measurement log (record-tagged CSV, time sorted):
 *
 *     #rinekf-log,schema=1,imu_rate=400,joint_rate=100
 *     INIT,t,x,y,z,qx,qy,qz,qw,vx,vy,vz      (optional, first record)
 *     IMU,t,wx,wy,wz,ax,ay,az
 *     JNT,t,q1,...,q12
 *     CNT,t,c1,c2,c3,c4
 *
 * Trajectory (TUM style): `t x y z qx qy qz qw`, space separated, '#' comments.
 *
 * Numbers are written in shortest round-trip form, so write/read is lossless.
 */
#pragma once

#include "rinekf/measurement_log.hpp"
#include "rinekf/trajectory.hpp"

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

namespace rinekf {

class FormatError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);

void write_log(std::ostream& out, const MeasurementLog& log);
/// Throws FormatError naming the line for malformed, unordered or unknown records.
MeasurementLog read_log(std::istream& in);

void write_trajectory(std::ostream& out, const Trajectory& traj);
/// Quaternions must be unit within 1e-6; they are renormalised on load.
Trajectory read_trajectory(std::istream& in);

void save_log(const std::filesystem::path& path, const MeasurementLog& log);
MeasurementLog load_log(const std::filesystem::path& path);
void save_trajectory(const std::filesystem::path& path, const Trajectory& traj);
Trajectory load_trajectory(const std::filesystem::path& path);

/// Writes text to a file, throwing FormatError on failure.
void save_text(const std::filesystem::path& path, const std::string& text);

}  // namespace rinekf
