#include "rinekf/eval.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace rinekf {

namespace {

struct RigidPose {
  Mat3 rot = Mat3::Identity();
  Vec3 trans = Vec3::Zero();
};

RigidPose to_rigid(const Pose& p) {
  return {p.orientation.normalized().toRotationMatrix(), p.position};
}

RigidPose relative(const RigidPose& a, const RigidPose& b) {
  return {a.rot.transpose() * b.rot, a.rot.transpose() * (b.trans - a.trans)};
}

Pose interpolate(const Pose& a, const Pose& b, double alpha) {
  Pose out;
  out.t = a.t + alpha * (b.t - a.t);
  out.position = a.position + alpha * (b.position - a.position);
  out.orientation = a.orientation.normalized().slerp(alpha, b.orientation.normalized());
  return out;
}

double rotation_angle(const Mat3& r) {
  const double c = std::clamp(0.5 * (r.trace() - 1.0), -1.0, 1.0);
  const double s = 0.5 * Vec3(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1)).norm();
  return std::atan2(s, c);
}

}  // namespace

Association associate(const Trajectory& est, const Trajectory& ref, double max_dt) {
  if (est.empty() || ref.empty()) {
    throw EvalError("associate: empty trajectory");
  }
  Association out;
  std::vector<bool> used(ref.size(), false);
  for (const Pose& e : est.poses) {
    const auto it = std::lower_bound(ref.poses.begin(), ref.poses.end(), e.t,
                                     [](const Pose& p, double t) { return p.t < t; });
    auto best = ref.poses.end();
    if (it != ref.poses.end()) {
      best = it;
    }
    if (it != ref.poses.begin()) {
      const auto prev = it - 1;
      if (best == ref.poses.end() || e.t - prev->t <= best->t - e.t) {
        best = prev;
      }
    }
    if (best == ref.poses.end() || std::abs(best->t - e.t) > max_dt) {
      ++out.unpaired_est;
      continue;
    }
    used[static_cast<std::size_t>(best - ref.poses.begin())] = true;
    out.pairs.push_back({e, *best});
  }
  out.unpaired_ref = static_cast<std::size_t>(std::count(used.begin(), used.end(), false));
  if (out.pairs.empty()) {
    throw EvalError("associate: no poses within max_dt=" + std::to_string(max_dt) + " s");
  }
  return out;
}

Alignment parse_alignment(std::string_view name) {
  if (name == "none") {
    return Alignment::none;
  }
  if (name == "se3") {
    return Alignment::se3;
  }
  throw std::invalid_argument("unknown alignment '" + std::string(name) + "' (none|se3)");
}

std::string to_string(Alignment align) { return align == Alignment::se3 ? "se3" : "none"; }

AteResult ate(const Association& assoc, Alignment align) {
  const auto n = static_cast<Eigen::Index>(assoc.pairs.size());
  if (n < 2) {
    throw EvalError("ate: need at least 2 associated poses");
  }
  Eigen::Matrix3Xd src(3, n), dst(3, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    src.col(i) = assoc.pairs[static_cast<std::size_t>(i)].est.position;
    dst.col(i) = assoc.pairs[static_cast<std::size_t>(i)].ref.position;
  }

  AteResult out;
  if (align == Alignment::se3) {
    const Vec3 mean = src.rowwise().mean();
    const double spread = (src.colwise() - mean).colwise().norm().maxCoeff();
    if (spread < 1e-12) {
      out.alignment_fallback = true;
    } else {
      const Eigen::Matrix4d t = Eigen::umeyama(src, dst, false);
      out.align_rot = t.block<3, 3>(0, 0);
      out.align_trans = t.block<3, 1>(0, 3);
      out.applied = Alignment::se3;
    }
  }

  double sum = 0.0;
  out.residuals.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = (out.align_rot * src.col(i) + out.align_trans - dst.col(i)).norm();
    out.residuals.push_back(r);
    sum += r * r;
  }
  out.rmse = std::sqrt(sum / static_cast<double>(n));
  return out;
}

AteResult ate(const Trajectory& est, const Trajectory& ref, Alignment align, double max_dt) {
  return ate(associate(est, ref, max_dt), align);
}

RpeResult rpe(const Association& assoc, double delta_distance) {
  if (!(delta_distance > 0.0)) {
    throw EvalError("rpe: delta distance must be positive");
  }
  const auto& pairs = assoc.pairs;
  const std::size_t n = pairs.size();
  std::vector<double> arc(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) {
    arc[i] = arc[i - 1] + (pairs[i].ref.position - pairs[i - 1].ref.position).norm();
  }
  if (n < 2 || arc.back() < delta_distance) {
    throw EvalError("rpe: reference arc length " + std::to_string(n ? arc.back() : 0.0) +
                    " m is shorter than delta " + std::to_string(delta_distance) + " m");
  }

  RpeResult out;
  double sum_t = 0.0, sum_r = 0.0;
  std::size_t j = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double target = arc[i] + delta_distance;
    if (target > arc.back()) {
      break;
    }
    j = std::max(j, i);
    while (j + 1 < n && arc[j + 1] < target) {
      ++j;
    }
    if (j + 1 >= n) {
      break;
    }
    const double seg = arc[j + 1] - arc[j];
    const double alpha = seg > 0.0 ? (target - arc[j]) / seg : 0.0;
    const Pose ref_j = interpolate(pairs[j].ref, pairs[j + 1].ref, alpha);
    const Pose est_j = interpolate(pairs[j].est, pairs[j + 1].est, alpha);

    const RigidPose d_ref = relative(to_rigid(pairs[i].ref), to_rigid(ref_j));
    const RigidPose d_est = relative(to_rigid(pairs[i].est), to_rigid(est_j));
    const RigidPose err = relative(d_ref, d_est);
    const double et = err.trans.norm();
    const double er = rotation_angle(err.rot) * 180.0 / std::numbers::pi;
    sum_t += et * et;
    sum_r += er * er;
    ++out.num_pairs;
  }
  if (out.num_pairs == 0) {
    throw EvalError("rpe: no pose pairs separated by " + std::to_string(delta_distance) + " m");
  }
  out.trans_rmse = std::sqrt(sum_t / static_cast<double>(out.num_pairs));
  out.rot_rmse_deg = std::sqrt(sum_r / static_cast<double>(out.num_pairs));
  return out;
}

RpeResult rpe(const Trajectory& est, const Trajectory& ref, double delta_distance, double max_dt) {
  return rpe(associate(est, ref, max_dt), delta_distance);
}

Trajectory transform_trajectory(const Trajectory& traj, const Mat3& rot, const Vec3& trans) {
  Trajectory out;
  out.poses.reserve(traj.size());
  const Eigen::Quaterniond q(rot);
  for (const Pose& p : traj.poses) {
    Pose t = p;
    t.position = rot * p.position + trans;
    t.orientation = (q * p.orientation).normalized();
    out.poses.push_back(t);
  }
  return out;
}

}  // namespace rinekf
