#include "rinekf/trajectory.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace rinekf {

void Trajectory::push_back(double t, const Vec3& position, const Rotation& rot) {
  Pose pose;
  pose.t = t;
  pose.position = position;
  pose.orientation = Eigen::Quaterniond(rot.matrix()).normalized();
  poses.push_back(pose);
}

void Trajectory::validate(double quat_tol) const {
  for (std::size_t i = 0; i < poses.size(); ++i) {
    const Pose& p = poses[i];
    if (!std::isfinite(p.t) || !p.position.allFinite()) {
      throw std::invalid_argument("trajectory row " + std::to_string(i) + ": non-finite values");
    }
    if (std::abs(p.orientation.norm() - 1.0) > quat_tol) {
      throw std::invalid_argument("trajectory row " + std::to_string(i) +
                                  ": quaternion is not normalized");
    }
    if (i > 0 && !(p.t > poses[i - 1].t)) {
      throw std::invalid_argument("trajectory row " + std::to_string(i) +
                                  ": timestamps must be strictly increasing");
    }
  }
}

}  // namespace rinekf
