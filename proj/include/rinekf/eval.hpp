/**
 * @file eval.hpp
 * @brief Trajectory association, absolute trajectory error and relative pose error.
 */
#pragma once

#include "rinekf/trajectory.hpp"

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rinekf {

class EvalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct PosePair {
  Pose est;
  Pose ref;
};

struct Association {
  std::vector<PosePair> pairs;
  std::size_t unpaired_est = 0;
  std::size_t unpaired_ref = 0;
};

/// Pairs every est pose with the nearest ref pose if |dt| <= max_dt.
/// Throws EvalError if either input is empty or nothing pairs.
Association associate(const Trajectory& est, const Trajectory& ref, double max_dt = 0.01);

enum class Alignment { none, se3 };

Alignment parse_alignment(std::string_view name);
std::string to_string(Alignment align);

struct AteResult {
  double rmse = 0.0;
  std::vector<double> residuals;  // per pair, m
  Mat3 align_rot = Mat3::Identity();
  Vec3 align_trans = Vec3::Zero();
  Alignment applied = Alignment::none;
  bool alignment_fallback = false;  // se3 requested but the points were degenerate
};

/// RMSE of translational residuals after optional rigid alignment of est onto ref.
AteResult ate(const Association& assoc, Alignment align);
AteResult ate(const Trajectory& est, const Trajectory& ref, Alignment align,
              double max_dt = 0.01);

struct RpeResult {
  double trans_rmse = 0.0;    // m
  double rot_rmse_deg = 0.0;  // deg
  std::size_t num_pairs = 0;
};

/**
 * Relative pose error over delta_distance of ref arc length. For each associated
 * pose i the partner pose is interpolated (linear position, slerp orientation)
 * at arc length s_i + delta; the error is (ref_i^-1 ref_j)^-1 (est_i^-1 est_j).
 * Throws EvalError when ref is shorter than delta_distance.
 */
RpeResult rpe(const Association& assoc, double delta_distance);
RpeResult rpe(const Trajectory& est, const Trajectory& ref, double delta_distance,
              double max_dt = 0.01);

/// Applies x -> rot * x + trans to every pose.
Trajectory transform_trajectory(const Trajectory& traj, const Mat3& rot, const Vec3& trans);

}  // namespace rinekf
