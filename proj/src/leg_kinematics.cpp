#include "rinekf/leg_kinematics.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace rinekf {

namespace {

constexpr double kReachTolerance = 1e-12;

Mat3 rot_x(double a) {
  Mat3 m;
  const double c = std::cos(a), s = std::sin(a);
  m << 1, 0, 0,
       0, c, -s,
       0, s, c;
  return m;
}

// Foot position in the frame after the hip-roll joint.
Vec3 sagittal_chain(const JointAngles& q, const LegParams& p) {
  const double s1 = std::sin(q[1]), c1 = std::cos(q[1]);
  const double s12 = std::sin(q[1] + q[2]), c12 = std::cos(q[1] + q[2]);
  return Vec3(-p.l_thigh * s1 - p.l_calf * s12, p.side_sign * p.l_hip,
              -p.l_thigh * c1 - p.l_calf * c12);
}

}  // namespace

void LegParams::validate() const {
  if (!(l_thigh > 0.0) || !(l_calf > 0.0) || !(l_hip >= 0.0)) {
    throw std::invalid_argument("LegParams: link lengths must be positive");
  }
  if (side_sign != 1 && side_sign != -1) {
    throw std::invalid_argument("LegParams: side_sign must be +1 or -1");
  }
  if (!hip_offset.allFinite()) {
    throw std::invalid_argument("LegParams: hip_offset must be finite");
  }
}

LegParams default_leg_params(int leg) {
  if (leg < 0 || leg >= kNumLegs) {
    throw std::invalid_argument("default_leg_params: leg id " + std::to_string(leg) +
                                " out of range");
  }
  const bool front = leg == kFrontLeft || leg == kFrontRight;
  const bool left = leg == kFrontLeft || leg == kRearLeft;
  LegParams p;
  p.hip_offset = Vec3(front ? 0.2 : -0.2, left ? 0.05 : -0.05, 0.0);
  p.side_sign = left ? 1 : -1;
  return p;
}

void check_covariance(const Mat3& m, const char* name) {
  if (!m.allFinite()) {
    throw std::invalid_argument(std::string(name) + ": non-finite entries");
  }
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw std::invalid_argument(std::string(name) + ": covariance is not symmetric");
  }
  const double min_eig = Eigen::SelfAdjointEigenSolver<Mat3>(m).eigenvalues().minCoeff();
  if (min_eig < -1e-12) {
    throw std::invalid_argument(std::string(name) + ": covariance is not positive semidefinite");
  }
}

void NoiseConfig::validate() const {
  check_covariance(gyro, "noise.gyro");
  check_covariance(accel, "noise.accel");
  check_covariance(foot, "noise.foot");
  check_covariance(encoder, "noise.encoder");
  check_covariance(kinematics, "noise.kinematics");
}

Vec3 forward_kinematics(const JointAngles& q, const LegParams& params) {
  return params.hip_offset + rot_x(q[0]) * sagittal_chain(q, params);
}

Mat3 leg_jacobian(const JointAngles& q, const LegParams& params) {
  const Mat3 rx = rot_x(q[0]);
  const Vec3 u = sagittal_chain(q, params);
  const double s12 = std::sin(q[1] + q[2]), c12 = std::cos(q[1] + q[2]);
  Mat3 j;
  j.col(0) = rx * Vec3::UnitX().cross(u);
  j.col(1) = rx * Vec3(u.z(), 0.0, -u.x());
  j.col(2) = rx * Vec3(-params.l_calf * c12, 0.0, params.l_calf * s12);
  return j;
}

Mat3 measurement_covariance(const JointAngles& q, const LegParams& params,
                            const ImuExtrinsics& extrinsics, const NoiseConfig& noise) {
  const Mat3 j = leg_jacobian(q, params);
  const Mat3& r = extrinsics.rot.matrix();
  const Mat3 n = r * (noise.kinematics + j * noise.encoder * j.transpose()) * r.transpose();
  return 0.5 * (n + n.transpose());
}

JointAngles inverse_kinematics(const Vec3& foot_b, const LegParams& params) {
  const Vec3 d = foot_b - params.hip_offset;
  const double lateral = params.side_sign * params.l_hip;
  const double r = std::hypot(d.y(), d.z());
  if (r < params.l_hip) {
    throw OutOfWorkspace("inverse_kinematics: target lies inside the abduction radius");
  }

  // Hip roll places the abduction link so the remaining vector points down.
  const double alpha = std::atan2(d.z(), d.y());
  double q0 = alpha + std::acos(std::clamp(lateral / r, -1.0, 1.0));
  q0 = std::remainder(q0, 2.0 * std::numbers::pi);

  const double x = d.x();
  const double z = -std::sqrt(std::max(r * r - params.l_hip * params.l_hip, 0.0));
  const double reach = std::hypot(x, z);
  const double lt = params.l_thigh, lc = params.l_calf;
  if (reach > lt + lc + kReachTolerance || reach < std::abs(lt - lc) - kReachTolerance) {
    throw OutOfWorkspace("inverse_kinematics: target distance " + std::to_string(reach) +
                         " m outside reachable annulus [" + std::to_string(std::abs(lt - lc)) +
                         ", " + std::to_string(lt + lc) + "]");
  }

  const double cos_knee = std::clamp((reach * reach - lt * lt - lc * lc) / (2.0 * lt * lc), -1.0, 1.0);
  const double q2 = -std::acos(cos_knee);
  const double a = lt + lc * std::cos(q2);
  const double b = lc * std::sin(q2);
  const double q1 = std::atan2(-x, -z) - std::atan2(b, a);
  return JointAngles(q0, std::remainder(q1, 2.0 * std::numbers::pi), q2);
}

}  // namespace rinekf
