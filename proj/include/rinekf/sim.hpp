/**
 * @file sim.hpp
 * @brief Synthetic walking scenarios with exact measurement models.
 *
 * The base (IMU) motion is an analytic profile. The ground truth is obtained by
 * integrating the analytic IMU rates with the same discrete motion model the
 * filter uses, so a noise-free filter started at the truth reproduces it to
 * rounding error. Feet follow a gait schedule; slip events move a foot while
 * its contact flag stays true.
 */
#pragma once

#include "rinekf/inekf.hpp"
#include "rinekf/measurement_log.hpp"
#include "rinekf/trajectory.hpp"

#include <array>
#include <cstdint>
#include <random>
#include <vector>

namespace rinekf {

struct Sinusoid {
  double amplitude = 0.0;
  double frequency = 0.0;  // Hz
  double phase = 0.0;      // rad
};

/**
 * Analytic IMU motion. The position follows a straight line (turn_rate == 0)
 * or a circle at forward_speed, plus per-axis world-frame sinusoids. The
 * attitude is Rz(yaw) Ry(pitch) Rx(roll) with yaw = initial_yaw + turn_rate t
 * plus sinusoids.
 */
struct MotionProfile {
  Vec3 initial_position = Vec3(0.0, 0.0, 0.4);
  double initial_yaw = 0.0;
  double forward_speed = 0.2;
  double turn_rate = 0.0;
  std::vector<Sinusoid> x, y, z, roll, pitch, yaw;
};

struct TruthSample {
  double t = 0.0;
  Rotation rot;
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  Vec3 accel_world = Vec3::Zero();
  Vec3 omega = Vec3::Zero();     // body rate, IMU frame
  Vec3 accel_imu = Vec3::Zero(); // specific force, IMU frame
  double yaw = 0.0;
};

TruthSample evaluate_profile(const MotionProfile& profile, double t, const Vec3& gravity);

/// Samples the profile at k / imu_rate for k = 0..round(horizon * imu_rate).
std::vector<TruthSample> generate_trajectory(const MotionProfile& profile, double horizon,
                                             double imu_rate, const Vec3& gravity);

enum class GaitType { crawl, trot };

struct GaitSpec {
  GaitType type = GaitType::crawl;
  double period = 1.5;       // s
  double duty = 0.85;
  double step_length = 0.3;  // m
  double step_height = 0.06; // m
  std::array<double, kNumLegs> offsets = {0.0, 0.25, 0.5, 0.75};

  static GaitSpec crawl();
  static GaitSpec trot();

  /// Minimum number of legs in stance over a cycle.
  int min_stance_legs() const;

  /// Throws std::invalid_argument for out-of-range values or infeasible phasing.
  void validate() const;
};

struct StanceInterval {
  double touchdown = 0.0;
  double liftoff = 0.0;
  Vec3 foothold = Vec3::Zero();  // world frame, filled by plan_footholds
};

struct ContactSchedule {
  double horizon = 0.0;
  std::array<std::vector<StanceInterval>, kNumLegs> stances;

  bool in_contact(int leg, double t) const;
  int stance_count(double t) const;
  /// Index of the stance interval containing t, or -1.
  int stance_index(int leg, double t) const;
};

/// Leg phase is frac(t / period - offset); a leg is in stance while phase < duty.
ContactSchedule schedule_contacts(const GaitSpec& gait, double horizon);

/**
 * Places every stance foothold below its hip at mid-stance, using the analytic
 * profile position and heading. stand_height is the hip-to-foot height.
 */
void plan_footholds(ContactSchedule& schedule, const MotionProfile& profile,
                    const std::array<LegParams, kNumLegs>& legs, const ImuExtrinsics& extrinsics,
                    double stand_height);

struct SlipEvent {
  double t_start = 0.0;
  int leg = 0;
  Vec3 velocity = Vec3::Zero();  // m/s, world frame
  double duration = 0.0;         // s
};

struct SlipSpec {
  std::vector<SlipEvent> events;
};

/// World position of a foot, including swing arcs and slip displacements.
Vec3 foot_position(const ContactSchedule& schedule, const SlipSpec& slips, const GaitSpec& gait,
                   int leg, double t);

struct SimSettings {
  double horizon = 60.0;
  double imu_rate = 400.0;
  double joint_rate = 100.0;
  double stand_height = 0.4;
  double noise_scale = 1.0;
  std::uint64_t seed = 1;
  Vec3 gravity = Vec3(0.0, 0.0, -9.81);
  MotionModel motion_model = MotionModel::approximate;
};

struct SlipAnnotation {
  SlipEvent event;
  double displacement = 0.0;  // m
};

struct SimOutput {
  Trajectory ground_truth;   // IMU poses on the IMU clock
  std::vector<Vec3> truth_velocity;
  MeasurementLog log;
  std::vector<SlipAnnotation> slips;
};

class SimError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/**
 * Integrates the profile into the discrete ground truth and synthesizes IMU,
 * encoder and contact streams. Deterministic for a given seed.
 * Throws SimError if a slip is not inside a stance or a foot leaves the workspace.
 */
SimOutput synthesize_log(const MotionProfile& profile, const ContactSchedule& schedule,
                         const GaitSpec& gait, const SlipSpec& slips,
                         const std::array<LegParams, kNumLegs>& legs,
                         const ImuExtrinsics& extrinsics, const NoiseConfig& noise,
                         const SimSettings& settings);

/// Zero-mean Gaussian vectors with a given covariance, reproducible across platforms.
class GaussianSampler {
public:
  explicit GaussianSampler(std::uint64_t seed) : engine_(seed) {}

  double standard_normal();
  /// sqrt_cov * z with z standard normal; pass psd_sqrt(cov).
  Vec3 correlated(const Mat3& sqrt_cov);

private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Symmetric square root of a PSD matrix.
Mat3 psd_sqrt(const Mat3& cov);

}  // namespace rinekf
