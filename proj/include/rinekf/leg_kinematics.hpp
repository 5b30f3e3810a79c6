/**
 * @file leg_kinematics.hpp
 * @brief Kinematics of a 3-DOF quadruped leg and the contact measurement noise.
 *
 * Chain, expressed in the base frame: hip roll about x at hip_offset, an
 * abduction link of length l_hip along side_sign * y, hip pitch about y, a
 * thigh of length l_thigh along -z, knee pitch about y and a calf of length
 * l_calf along -z. With all joints at zero the leg points straight down.
 * Inverse kinematics returns the knee-backward branch (knee angle <= 0).
 */
#pragma once

#include "rinekf/lie.hpp"

#include <array>
#include <stdexcept>

namespace rinekf {

using JointAngles = Eigen::Vector3d;

enum LegId : int { kFrontLeft = 0, kFrontRight = 1, kRearLeft = 2, kRearRight = 3 };
inline constexpr int kNumLegs = 4;

struct LegParams {
  Vec3 hip_offset = Vec3::Zero();
  double l_hip = 0.08;
  double l_thigh = 0.25;
  double l_calf = 0.25;
  int side_sign = 1;

  void validate() const;
};

/// Default geometry for leg `leg` of an A1/AlienGo-sized robot.
LegParams default_leg_params(int leg);

/// Maps base-frame points into the IMU frame: x_I = rot * x_B + trans.
struct ImuExtrinsics {
  Rotation rot;
  Vec3 trans = Vec3::Zero();

  Vec3 base_to_imu(const Vec3& x_b) const { return rot.matrix() * x_b + trans; }
  Vec3 imu_to_base(const Vec3& x_i) const { return rot.matrix().transpose() * (x_i - trans); }
};

/**
 * Sensor noise covariances. Units: gyro rad^2/s^2, accel m^2/s^4,
 * foot m^2/s^2 (foot velocity noise), encoder rad^2, kinematics m^2.
 * Each is a per-sample covariance.
 */
struct NoiseConfig {
  Mat3 gyro = Mat3::Identity() * 0.002 * 0.002;
  Mat3 accel = Mat3::Identity() * 0.02 * 0.02;
  Mat3 foot = Mat3::Identity() * 0.01 * 0.01;
  Mat3 encoder = Mat3::Identity() * 0.001 * 0.001;
  Mat3 kinematics = Mat3::Identity() * 0.003 * 0.003;

  /// Throws std::invalid_argument naming the first non-symmetric or non-PSD entry.
  void validate() const;
};

/// Throws std::invalid_argument if m is not symmetric PSD within 1e-12.
void check_covariance(const Mat3& m, const char* name);

class OutOfWorkspace : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

Vec3 forward_kinematics(const JointAngles& q, const LegParams& params);

/// d forward_kinematics / dq.
Mat3 leg_jacobian(const JointAngles& q, const LegParams& params);

/// Covariance of the IMU-frame contact measurement: R_ib (Q_K + J Q_q J^T) R_ib^T.
Mat3 measurement_covariance(const JointAngles& q, const LegParams& params,
                            const ImuExtrinsics& extrinsics, const NoiseConfig& noise);

/// Throws OutOfWorkspace when the target is outside the reachable annulus.
JointAngles inverse_kinematics(const Vec3& foot_b, const LegParams& params);

}  // namespace rinekf
