#pragma once

#include "rinekf/inekf.hpp"

#include <array>
#include <optional>
#include <vector>

namespace rinekf {

/// Joint angles of all legs at one instant (q1..q12 in leg order).
struct JointRecord {
  double t = 0.0;
  std::array<JointAngles, kNumLegs> q{};
};

struct ContactRecord {
  double t = 0.0;
  std::array<bool, kNumLegs> in_contact{};
};

/// Optional filter initialisation carried by the log.
struct InitialState {
  double t = 0.0;
  Rotation rot;
  Vec3 velocity = Vec3::Zero();
  Vec3 position = Vec3::Zero();
};

/**
 * Time-stamped proprioceptive measurements.
 *
 * An IMU sample at time t carries the rates applied over the interval that
 * ends at t. Joint and contact records share timestamps.
 */
struct MeasurementLog {
  static constexpr int kSchemaVersion = 1;

  double imu_rate = 400.0;
  double joint_rate = 100.0;
  std::optional<InitialState> initial;
  std::vector<ImuSample> imu;
  std::vector<JointRecord> joints;
  std::vector<ContactRecord> contacts;
};

}  // namespace rinekf
