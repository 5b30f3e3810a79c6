#pragma once

#include "rinekf/lie.hpp"

#include <Eigen/Geometry>

#include <vector>

namespace rinekf {

struct Pose {
  double t = 0.0;
  Vec3 position = Vec3::Zero();
  Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();
};

/// Time-stamped poses. Timestamps strictly increase; quaternions are unit.
struct Trajectory {
  std::vector<Pose> poses;

  std::size_t size() const { return poses.size(); }
  bool empty() const { return poses.empty(); }
  void push_back(double t, const Vec3& position, const Rotation& rot);

  /// Throws std::invalid_argument when an invariant is violated.
  void validate(double quat_tol = 1e-9) const;
};

}  // namespace rinekf
