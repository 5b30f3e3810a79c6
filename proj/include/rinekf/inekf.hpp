/**
 * @file inekf.hpp
 * @brief Right-invariant EKF for contact-aided inertial odometry.
 *
 * The state lives on SE_{2+N}(3): orientation, velocity and position of the
 * IMU in the world frame plus the world positions of the N feet in contact.
 * The covariance is that of the right-invariant error xi, X = exp(xi) * Xbar.
 *
 * All operations are pure: they take a state and return a new one.
 */
#pragma once

#include "rinekf/leg_kinematics.hpp"
#include "rinekf/lie.hpp"

#include <array>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rinekf {

struct ImuSample {
  double t = 0.0;
  Vec3 omega = Vec3::Zero();  // rad/s, IMU frame
  Vec3 accel = Vec3::Zero();  // m/s^2, IMU frame (specific force)
};

struct ContactEvent {
  double t = 0.0;
  int leg = 0;
  bool in_contact = false;
  JointAngles q_leg = JointAngles::Zero();
};

/// Joint reading of one leg taking part in a measurement update.
struct LegMeasurement {
  int leg = 0;
  JointAngles q = JointAngles::Zero();
};

/// How the mean is integrated over one IMU interval.
enum class MotionModel {
  approximate,  // Gamma_1 ~ I dt, Gamma_2 ~ I dt^2/2
  exact,        // closed-form Gamma_1, Gamma_2
};

struct FilterConfig {
  Vec3 gravity = Vec3(0.0, 0.0, -9.81);
  NoiseConfig noise;
  ImuExtrinsics extrinsics;
  std::array<LegParams, kNumLegs> legs = {default_leg_params(0), default_leg_params(1),
                                          default_leg_params(2), default_leg_params(3)};
  /// Diagonal of the initial covariance over (rotation, velocity, position).
  Eigen::Matrix<double, 9, 1> initial_cov =
      (Eigen::Matrix<double, 9, 1>() << 1e-4, 1e-4, 1e-4, 1e-4, 1e-4, 1e-4, 1e-6, 1e-6, 1e-6)
          .finished();
  double new_contact_cov = 1e-2;  // m^2
  MotionModel motion_model = MotionModel::approximate;
  bool joseph_form = false;
  /// Replace G by the simplified G* noise map of the classic contact-aided InEKF.
  bool simplified_noise_map = false;
  Vec3 gyro_bias = Vec3::Zero();
  Vec3 accel_bias = Vec3::Zero();
  /// Allows gravity magnitudes outside [9.7, 9.9] m/s^2 (used by tests).
  bool allow_nonstandard_gravity = false;
  /// Innovation covariances with a larger condition number reject the update.
  double max_condition = 1e12;

  void validate() const;
};

class FilterError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct FilterState {
  GroupElement x{2};
  MatX cov = MatX::Zero(9, 9);
  /// leg id -> translation slot of its foot in x.
  std::map<int, int> contacts;
  double t = 0.0;

  int num_contacts() const { return static_cast<int>(contacts.size()); }
  int dim() const { return x.dim(); }

  /// Throws FilterError if covariance symmetry/PSD or the slot layout is violated.
  void check_invariants(double sym_tol = 1e-10, double eig_tol = -1e-9) const;
};

/// Initial state with no contacts and cov = diag(cfg.initial_cov).
FilterState make_initial_state(const Rotation& rot, const Vec3& velocity, const Vec3& position,
                               double t, const FilterConfig& cfg);

/// A = Ad_W * M for the error dynamics over dt; state independent.
MatX build_A(double dt, int num_contacts, const Vec3& gravity);

/// B = Ad_{Xbar} * G mapping (w_g, w_a, w_f^1..w_f^N) into the error.
MatX build_B(const FilterState& state, const ImuSample& imu, double dt, const FilterConfig& cfg);

/// Block-diagonal process noise (Q_g, Q_a, Q_f, ..., Q_f).
MatX process_noise(int num_contacts, const NoiseConfig& noise);

/// Noise-free mean propagation over dt.
GroupElement propagate_mean(const GroupElement& x, const ImuSample& imu, double dt,
                            const FilterConfig& cfg);

FilterState predict(const FilterState& state, const ImuSample& imu, double dt,
                    const FilterConfig& cfg);

/// Everything needed for a foot-kinematics measurement update, stacked over contacts.
struct MeasurementStack {
  MatX h;          // (3M) x dim
  VecX innovation; // delta z = Rbar (z_meas - z_pred), world-aligned
  MatX noise;      // Rbar N Rbar^T, block diagonal
};

/// Throws FilterError if a leg is not registered.
MeasurementStack build_measurements(const FilterState& state,
                                    const std::vector<LegMeasurement>& legs,
                                    const FilterConfig& cfg);

enum class UpdateStatus { applied, rejected_ill_conditioned, no_measurements };

struct UpdateOutcome {
  FilterState state;
  UpdateStatus status = UpdateStatus::applied;
  VecX correction;  // xi_hat applied as exp(xi_hat) * Xbar
  int irls_iterations = 0;
  bool irls_converged = true;
  bool irls_ill_conditioned = false;
};

/// Applies exp(xi) on the left and sets the covariance.
FilterState retract(const FilterState& state, const VecX& xi, const MatX& cov);

UpdateOutcome update(const FilterState& state, const std::vector<LegMeasurement>& legs,
                     const FilterConfig& cfg);

/// New foot slot initialised from the kinematics, block new_contact_cov * I.
FilterState add_contact(const FilterState& state, int leg, const JointAngles& q_leg,
                        const FilterConfig& cfg);
FilterState remove_contact(const FilterState& state, int leg);

std::string to_string(UpdateStatus status);

}  // namespace rinekf
