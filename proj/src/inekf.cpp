#include "rinekf/inekf.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>

namespace rinekf {

namespace {

void symmetrize(MatX& m) { m = 0.5 * (m + m.transpose()).eval(); }

void remove_block(MatX& m, int start, int size) {
  const int n = static_cast<int>(m.rows());
  const int tail = n - start - size;
  MatX out(n - size, n - size);
  out.topLeftCorner(start, start) = m.topLeftCorner(start, start);
  out.topRightCorner(start, tail) = m.topRightCorner(start, tail);
  out.bottomLeftCorner(tail, start) = m.bottomLeftCorner(tail, start);
  out.bottomRightCorner(tail, tail) = m.bottomRightCorner(tail, tail);
  m = std::move(out);
}

}  // namespace

void FilterConfig::validate() const {
  const double g = gravity.norm();
  if (!gravity.allFinite() || (!allow_nonstandard_gravity && (g < 9.7 || g > 9.9))) {
    throw std::invalid_argument("FilterConfig: gravity magnitude " + std::to_string(g) +
                                " outside [9.7, 9.9] m/s^2");
  }
  noise.validate();
  for (const auto& leg : legs) {
    leg.validate();
  }
  if ((initial_cov.array() < 0.0).any()) {
    throw std::invalid_argument("FilterConfig: initial_cov entries must be non-negative");
  }
  if (!(new_contact_cov > 0.0)) {
    throw std::invalid_argument("FilterConfig: new_contact_cov must be positive");
  }
  if (!(max_condition > 1.0)) {
    throw std::invalid_argument("FilterConfig: max_condition must exceed 1");
  }
}

void FilterState::check_invariants(double sym_tol, double eig_tol) const {
  if (cov.rows() != dim() || cov.cols() != dim()) {
    throw FilterError("FilterState: covariance size " + std::to_string(cov.rows()) +
                      " does not match state dimension " + std::to_string(dim()));
  }
  if (x.k() != 2 + num_contacts()) {
    throw FilterError("FilterState: slot count does not match the contact registry");
  }
  for (const auto& [leg, slot] : contacts) {
    if (slot < 2 || slot >= x.k()) {
      throw FilterError("FilterState: leg " + std::to_string(leg) + " maps to invalid slot");
    }
  }
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > sym_tol) {
    throw FilterError("FilterState: covariance is not symmetric");
  }
  const double min_eig = Eigen::SelfAdjointEigenSolver<MatX>(cov, Eigen::EigenvaluesOnly)
                             .eigenvalues()
                             .minCoeff();
  if (min_eig < eig_tol) {
    throw FilterError("FilterState: covariance has eigenvalue " + std::to_string(min_eig));
  }
}

FilterState make_initial_state(const Rotation& rot, const Vec3& velocity, const Vec3& position,
                               double t, const FilterConfig& cfg) {
  FilterState s;
  Mat3X trans(3, 2);
  trans << velocity, position;
  s.x = GroupElement(rot, trans);
  s.cov = cfg.initial_cov.asDiagonal();
  s.t = t;
  return s;
}

MatX build_A(double dt, int num_contacts, const Vec3& gravity) {
  const int n = 3 * (num_contacts + 3);
  MatX a = MatX::Identity(n, n);
  a.block<3, 3>(3, 0) = hat3(gravity * dt);
  a.block<3, 3>(6, 0) = hat3(gravity * (0.5 * dt * dt));
  a.block<3, 3>(6, 3) = Mat3::Identity() * dt;
  return a;
}

MatX process_noise(int num_contacts, const NoiseConfig& noise) {
  const int n = 6 + 3 * num_contacts;
  MatX q = MatX::Zero(n, n);
  q.block<3, 3>(0, 0) = noise.gyro;
  q.block<3, 3>(3, 3) = noise.accel;
  for (int i = 0; i < num_contacts; ++i) {
    q.block<3, 3>(6 + 3 * i, 6 + 3 * i) = noise.foot;
  }
  return q;
}

MatX build_B(const FilterState& state, const ImuSample& imu, double dt, const FilterConfig& cfg) {
  const int n_c = state.num_contacts();
  const int n = state.dim();
  MatX g = MatX::Zero(n, 6 + 3 * n_c);
  const Mat3 eye = Mat3::Identity();
  if (cfg.simplified_noise_map) {
    g.block<3, 3>(0, 0) = eye * dt;
    g.block<3, 3>(3, 3) = eye * dt;
  } else {
    const Vec3 omega = imu.omega - cfg.gyro_bias;
    g.block<3, 3>(0, 0) = -so3_right_jacobian(omega * dt) * dt;
    g.block<3, 3>(3, 3) = eye * dt;
    g.block<3, 3>(6, 3) = eye * (0.5 * dt * dt);
  }
  for (int i = 0; i < n_c; ++i) {
    g.block<3, 3>(9 + 3 * i, 6 + 3 * i) = eye * dt;
  }
  return state.x.adjoint() * g;
}

GroupElement propagate_mean(const GroupElement& x, const ImuSample& imu, double dt,
                            const FilterConfig& cfg) {
  const Vec3 omega = imu.omega - cfg.gyro_bias;
  const Vec3 accel = imu.accel - cfg.accel_bias;
  const Mat3& r = x.rot().matrix();
  const Vec3 v = x.velocity();
  const Vec3 p = x.position();

  Vec3 dv, dp;
  if (cfg.motion_model == MotionModel::exact) {
    dv = gamma(1, omega, dt) * accel;
    dp = gamma(2, omega, dt) * accel;
  } else {
    dv = accel * dt;
    dp = accel * (0.5 * dt * dt);
  }

  GroupElement out = x;
  Rotation r_next = x.rot() * so3_exp(omega * dt);
  if (r_next.orthogonality_error() > 1e-12) {
    r_next = r_next.normalized();
  }
  out.set_rot(r_next);
  out.set_slot(0, v + cfg.gravity * dt + r * dv);
  out.set_slot(1, p + v * dt + cfg.gravity * (0.5 * dt * dt) + r * dp);
  return out;
}

FilterState predict(const FilterState& state, const ImuSample& imu, double dt,
                    const FilterConfig& cfg) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw FilterError("predict: dt must be positive, got " + std::to_string(dt));
  }
  if (!imu.omega.allFinite() || !imu.accel.allFinite()) {
    throw FilterError("predict: non-finite IMU sample at t=" + std::to_string(imu.t));
  }
  const MatX a = build_A(dt, state.num_contacts(), cfg.gravity);
  const MatX b = build_B(state, imu, dt, cfg);
  const MatX q = process_noise(state.num_contacts(), cfg.noise);

  FilterState out;
  out.x = propagate_mean(state.x, imu, dt, cfg);
  out.cov = a * state.cov * a.transpose() + b * q * b.transpose();
  symmetrize(out.cov);
  out.contacts = state.contacts;
  out.t = state.t + dt;
  return out;
}

MeasurementStack build_measurements(const FilterState& state,
                                    const std::vector<LegMeasurement>& legs,
                                    const FilterConfig& cfg) {
  const int m = static_cast<int>(legs.size());
  const int n = state.dim();
  MeasurementStack stack;
  stack.h = MatX::Zero(3 * m, n);
  stack.innovation = VecX::Zero(3 * m);
  stack.noise = MatX::Zero(3 * m, 3 * m);

  const Mat3& r = state.x.rot().matrix();
  const Vec3 p = state.x.position();
  for (int i = 0; i < m; ++i) {
    const auto& meas = legs[static_cast<std::size_t>(i)];
    const auto it = state.contacts.find(meas.leg);
    if (it == state.contacts.end()) {
      throw FilterError("update: leg " + std::to_string(meas.leg) + " is not in contact");
    }
    const int slot = it->second;
    const LegParams& params = cfg.legs.at(static_cast<std::size_t>(meas.leg));
    const Vec3 z_meas = cfg.extrinsics.base_to_imu(forward_kinematics(meas.q, params));
    const Mat3 n_imu = measurement_covariance(meas.q, params, cfg.extrinsics, cfg.noise);

    stack.innovation.segment<3>(3 * i) = r * z_meas - (state.x.slot(slot) - p);
    stack.h.block<3, 3>(3 * i, 6) = -Mat3::Identity();
    stack.h.block<3, 3>(3 * i, 3 * (slot + 1)) = Mat3::Identity();
    stack.noise.block<3, 3>(3 * i, 3 * i) = r * n_imu * r.transpose();
  }
  return stack;
}

FilterState retract(const FilterState& state, const VecX& xi, const MatX& cov) {
  FilterState out;
  out.x = group_exp(xi).compose(state.x);
  out.cov = cov;
  symmetrize(out.cov);
  out.contacts = state.contacts;
  out.t = state.t;
  return out;
}

UpdateOutcome update(const FilterState& state, const std::vector<LegMeasurement>& legs,
                     const FilterConfig& cfg) {
  UpdateOutcome outcome;
  if (legs.empty()) {
    outcome.state = state;
    outcome.status = UpdateStatus::no_measurements;
    outcome.correction = VecX::Zero(state.dim());
    return outcome;
  }
  const MeasurementStack stack = build_measurements(state, legs, cfg);
  const MatX& p = state.cov;
  const MatX& h = stack.h;

  MatX s = h * p * h.transpose() + stack.noise;
  symmetrize(s);
  const VecX eig = Eigen::SelfAdjointEigenSolver<MatX>(s, Eigen::EigenvaluesOnly).eigenvalues();
  if (!(eig.minCoeff() > 0.0) || eig.maxCoeff() / eig.minCoeff() > cfg.max_condition) {
    outcome.state = state;
    outcome.status = UpdateStatus::rejected_ill_conditioned;
    outcome.correction = VecX::Zero(state.dim());
    return outcome;
  }

  const MatX k = s.llt().solve(h * p).transpose();
  const VecX xi = k * stack.innovation;
  const MatX ikh = MatX::Identity(state.dim(), state.dim()) - k * h;
  MatX cov;
  if (cfg.joseph_form) {
    cov = ikh * p * ikh.transpose() + k * stack.noise * k.transpose();
  } else {
    cov = ikh * p;
  }
  outcome.state = retract(state, xi, cov);
  outcome.correction = xi;
  outcome.irls_iterations = 1;
  return outcome;
}

FilterState add_contact(const FilterState& state, int leg, const JointAngles& q_leg,
                        const FilterConfig& cfg) {
  if (leg < 0 || leg >= kNumLegs) {
    throw FilterError("add_contact: leg id " + std::to_string(leg) + " out of range");
  }
  if (state.contacts.contains(leg)) {
    throw FilterError("add_contact: leg " + std::to_string(leg) + " already in contact");
  }
  const Vec3 z = cfg.extrinsics.base_to_imu(
      forward_kinematics(q_leg, cfg.legs[static_cast<std::size_t>(leg)]));
  FilterState out = state;
  const int slot = out.x.append_slot(state.x.position() + state.x.rot().matrix() * z);
  out.contacts[leg] = slot;

  const int n = state.dim();
  out.cov = MatX::Zero(n + 3, n + 3);
  out.cov.topLeftCorner(n, n) = state.cov;
  out.cov.bottomRightCorner<3, 3>() = Mat3::Identity() * cfg.new_contact_cov;
  return out;
}

FilterState remove_contact(const FilterState& state, int leg) {
  const auto it = state.contacts.find(leg);
  if (it == state.contacts.end()) {
    throw FilterError("remove_contact: leg " + std::to_string(leg) + " is not in contact");
  }
  const int slot = it->second;
  FilterState out = state;
  out.x.remove_slot(slot);
  remove_block(out.cov, 3 * (slot + 1), 3);
  out.contacts.erase(leg);
  for (auto& [other, other_slot] : out.contacts) {
    if (other_slot > slot) {
      --other_slot;
    }
  }
  return out;
}

std::string to_string(UpdateStatus status) {
  switch (status) {
    case UpdateStatus::applied:
      return "applied";
    case UpdateStatus::rejected_ill_conditioned:
      return "rejected_ill_conditioned";
    case UpdateStatus::no_measurements:
      return "no_measurements";
  }
  return "unknown";
}

}  // namespace rinekf
