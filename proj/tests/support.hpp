// Random inputs and independent oracles shared by the test programs.
#pragma once

#include "rinekf/inekf.hpp"
#include "rinekf/lie.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <random>

namespace rinekf::test {

class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }

  Vec3 vec3(double scale) { return Vec3(uniform(-scale, scale), uniform(-scale, scale), uniform(-scale, scale)); }
  Vec3 gaussian3() { return Vec3(normal(), normal(), normal()); }

  VecX vec(int n, double scale) {
    VecX v(n);
    for (int i = 0; i < n; ++i) {
      v[i] = uniform(-scale, scale);
    }
    return v;
  }

  /// Rotation vector with angle uniform in [0, max_angle].
  Vec3 rotation_vector(double max_angle) {
    Vec3 axis = gaussian3();
    while (axis.norm() < 1e-6) {
      axis = gaussian3();
    }
    return axis.normalized() * uniform(0.0, max_angle);
  }

  /// Uniformly distributed rotation (via a unit quaternion).
  Rotation rotation() {
    Eigen::Quaterniond q(normal(), normal(), normal(), normal());
    return Rotation(q.normalized().toRotationMatrix());
  }

  GroupElement element(int k, double trans_scale = 2.0) {
    Mat3X t(3, k);
    for (int i = 0; i < k; ++i) {
      t.col(i) = vec3(trans_scale);
    }
    return GroupElement(rotation(), t);
  }

  MatX spd(int n, double scale) {
    MatX a(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        a(i, j) = normal();
      }
    }
    return scale * (a * a.transpose() / n + 0.1 * MatX::Identity(n, n));
  }

  /// Joint angles comfortably inside the workspace, knee backward.
  JointAngles joints() { return JointAngles(uniform(-0.3, 0.3), uniform(-0.4, 0.9), uniform(-2.0, -0.7)); }

  std::mt19937_64& engine() { return engine_; }

private:
  std::mt19937_64 engine_;
};

/// Element of the Lie algebra of SE_K(3) as a (3+K)x(3+K) matrix.
inline MatX algebra_matrix(const VecX& xi) {
  const int k = static_cast<int>(xi.size()) / 3 - 1;
  MatX m = MatX::Zero(3 + k, 3 + k);
  const Vec3 w = xi.head<3>();
  m.block<3, 3>(0, 0) << 0, -w.z(), w.y(), w.z(), 0, -w.x(), -w.y(), w.x(), 0;
  for (int i = 0; i < k; ++i) {
    m.block<3, 1>(0, 3 + i) = xi.segment<3>(3 + 3 * i);
  }
  return m;
}

/// Matrix exponential of the algebra element (Pade, independent of the closed forms).
inline MatX expm_oracle(const VecX& xi) { return algebra_matrix(xi).exp(); }

inline GroupElement from_matrix(const MatX& m) {
  const int k = static_cast<int>(m.cols()) - 3;
  return GroupElement(Rotation::unchecked(m.block<3, 3>(0, 0)), m.block(0, 3, 3, k));
}

/// Filter state with random pose, velocity, feet and covariance.
inline FilterState random_state(Rng& rng, int contacts, double cov_scale = 1e-2) {
  FilterState s;
  s.x = rng.element(2 + contacts);
  s.cov = rng.spd(s.x.dim(), cov_scale);
  for (int i = 0; i < contacts; ++i) {
    s.contacts[i] = 2 + i;
  }
  return s;
}

}  // namespace rinekf::test

namespace rinekf::test {

/// Sample covariance of the right-invariant error after one noisy propagation
/// step, starting from zero error. Noise enters the inputs exactly as in the
/// sensor model: rate and specific-force samples, and foot velocities.
inline MatX monte_carlo_step_covariance(const FilterState& state, const ImuSample& imu, double dt,
                                        const FilterConfig& cfg, int samples, Rng& rng) {
  const GroupElement mean = propagate_mean(state.x, imu, dt, cfg);
  const Eigen::LLT<Mat3> lg(cfg.noise.gyro), la(cfg.noise.accel), lf(cfg.noise.foot);
  const int n = state.dim();
  VecX sum = VecX::Zero(n);
  MatX outer = MatX::Zero(n, n);
  for (int s = 0; s < samples; ++s) {
    ImuSample noisy = imu;
    noisy.omega += lg.matrixL() * rng.gaussian3();
    noisy.accel += la.matrixL() * rng.gaussian3();
    GroupElement x = propagate_mean(state.x, noisy, dt, cfg);
    for (int i = 2; i < x.k(); ++i) {
      x.set_slot(i, x.slot(i) + lf.matrixL() * rng.gaussian3() * dt);
    }
    const VecX xi = right_error(x, mean);
    sum += xi;
    outer += xi * xi.transpose();
  }
  const VecX mu = sum / samples;
  return (outer - samples * mu * mu.transpose()) / (samples - 1);
}

/// Largest deviation between the propagated group error and A * xi over random trials.
inline double log_linearity_error(Rng& rng, int trials, const FilterConfig& cfg,
                                  double max_rot = 1.0) {
  double worst = 0.0;
  for (int i = 0; i < trials; ++i) {
    const int contacts = i % 5;
    const GroupElement xbar = rng.element(2 + contacts);
    VecX xi = rng.vec(xbar.dim(), 0.5);
    xi.head<3>() = rng.rotation_vector(max_rot);
    if (i % 10 == 0) {
      xi.head<3>() = xi.head<3>().normalized() * max_rot;
    }
    const ImuSample imu{0.0, rng.vec3(3.0), rng.vec3(10.0)};
    const double dt = rng.uniform(1e-3, 0.05);
    const GroupElement x = group_exp(xi) * xbar;
    const VecX propagated = right_error(propagate_mean(x, imu, dt, cfg), propagate_mean(xbar, imu, dt, cfg));
    const VecX linear = build_A(dt, contacts, cfg.gravity) * xi;
    worst = std::max(worst, (propagated - linear).norm());
  }
  return worst;
}

}  // namespace rinekf::test
