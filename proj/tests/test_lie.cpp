#include "support.hpp"

#include "rinekf/lie.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace rinekf;
using rinekf::test::Rng;

namespace {

constexpr double kPi = std::numbers::pi;

Mat3 gamma_series(int n, const Vec3& w, double dt) {
  const Mat3 wh = hat3(w);
  Mat3 term = Mat3::Identity();  // (w^)^k
  Mat3 sum = Mat3::Zero();
  double fact = 1.0;
  for (int i = 1; i <= n; ++i) {
    fact *= i;
  }
  for (int k = 0; k < 40; ++k) {
    // dt^(k+n) / (k+n)!
    sum += term * (std::pow(dt, k + n) / fact);
    term = term * wh;
    fact *= (k + n + 1);
  }
  return sum;
}

}  // namespace

TEST_CASE("hat and vee are inverse") {
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    const Vec3 v = rng.vec3(5.0);
    CHECK((vee3(hat3(v)) - v).norm() == 0.0);
    CHECK((hat3(v) + hat3(v).transpose()).norm() == 0.0);
    CHECK((hat3(v) * v).norm() < 1e-12);
  }
  Mat3 bad = hat3(Vec3(1, 2, 3));
  bad(0, 1) += 1e-3;
  CHECK_THROWS_AS(vee3(bad), std::invalid_argument);
}

TEST_CASE("so3_exp on hand examples") {
  CHECK((so3_exp(Vec3::Zero()).matrix() - Mat3::Identity()).norm() == 0.0);
  const Rotation rz = so3_exp(Vec3(0, 0, kPi / 2));
  CHECK((rz * Vec3::UnitX() - Vec3::UnitY()).norm() < 1e-15);
  const Rotation rx = so3_exp(Vec3(kPi, 0, 0));
  CHECK((rx.matrix() - Vec3(1, -1, -1).asDiagonal().toDenseMatrix()).norm() < 1e-15);
}

TEST_CASE("so3_log inverts so3_exp including small and near-pi angles") {
  Rng rng(2);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 w = rng.rotation_vector(kPi - 1e-6);
    CHECK((so3_log(so3_exp(w)) - w).norm() < 1e-9);
  }
  for (double angle : {1e-15, 1e-10, 1e-8, 1e-7, 1e-6, 1e-3}) {
    const Vec3 w = Vec3(1, -2, 0.5).normalized() * angle;
    CHECK((so3_log(so3_exp(w)) - w).norm() < 1e-15 + 1e-12 * angle);
  }
  for (double gap : {1e-4, 1e-6, 1e-8}) {
    const Vec3 axis = Vec3(0.3, -0.4, 0.866).normalized();
    const Vec3 w = axis * (kPi - gap);
    const Vec3 back = so3_log(so3_exp(w));
    CHECK((so3_exp(back).matrix() - so3_exp(w).matrix()).norm() < 1e-12);
    CHECK(back.norm() == doctest::Approx(kPi - gap).epsilon(1e-9));
  }
  // Exactly pi: either sign of the axis is a valid logarithm.
  const Vec3 back = so3_log(so3_exp(Vec3(0, kPi, 0)));
  CHECK(std::abs(std::abs(back.y()) - kPi) < 1e-12);
  CHECK(std::abs(back.x()) + std::abs(back.z()) < 1e-12);
}

TEST_CASE("SO(3) Jacobians match finite differences") {
  Rng rng(3);
  const double h = 1e-6;
  for (int i = 0; i < 50; ++i) {
    const Vec3 w = rng.rotation_vector(3.0);
    const Mat3 jl = so3_left_jacobian(w);
    const Mat3 jr = so3_right_jacobian(w);
    Mat3 fd_l, fd_r;
    for (int c = 0; c < 3; ++c) {
      const Vec3 d = Vec3::Unit(c) * h;
      const Rotation plus = so3_exp(w + d);
      fd_l.col(c) = so3_log(plus * so3_exp(w).inverse()) / h;
      fd_r.col(c) = so3_log(so3_exp(w).inverse() * plus) / h;
    }
    CHECK((jl - fd_l).norm() < 1e-5);
    CHECK((jr - fd_r).norm() < 1e-5);
    CHECK((so3_left_jacobian_inverse(w) * jl - Mat3::Identity()).norm() < 1e-10);
    CHECK((jr - so3_left_jacobian(-w)).norm() < 1e-14);
  }
  CHECK((so3_left_jacobian(Vec3::Zero()) - Mat3::Identity()).norm() == 0.0);
}

TEST_CASE("gamma functions equal their defining series") {
  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    const Vec3 w = rng.rotation_vector(i % 2 ? 5.0 : 1e-3);
    const double dt = rng.uniform(1e-4, 0.5);
    for (int n = 0; n <= 2; ++n) {
      const Mat3 series = gamma_series(n, w, dt);
      CHECK((gamma(n, w, dt) - series).norm() <= 1e-12 * std::max(1.0, series.norm()));
    }
  }
  CHECK((gamma(0, Vec3(0.1, 0.2, 0.3), 0.01).matrix() - so3_exp(Vec3(0.001, 0.002, 0.003)).matrix()).norm() < 1e-15);
  CHECK((gamma(2, Vec3::Zero(), 0.1) - Mat3::Identity() * 0.005).norm() < 1e-17);
  CHECK_THROWS(gamma(3, Vec3::Zero(), 0.1));
}

TEST_CASE("Rotation validates and renormalizes") {
  Mat3 m = Mat3::Identity();
  m(0, 0) = 1.001;
  CHECK_THROWS_AS(Rotation{m}, std::invalid_argument);
  CHECK_THROWS_AS(Rotation{Mat3(Vec3(1, 1, -1).asDiagonal())}, std::invalid_argument);
  const Rotation drifted = Rotation::unchecked(so3_exp(Vec3(0.3, 0.2, 0.1)).matrix() * 1.0001);
  CHECK(drifted.orthogonality_error() > 1e-5);
  CHECK(drifted.normalized().orthogonality_error() < 1e-14);
}

TEST_CASE("group_exp matches the matrix exponential") {
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    const int k = 2 + i % 4;
    VecX xi = rng.vec(3 * (k + 1), 2.0);
    xi.head<3>() = rng.rotation_vector(3.0);
    const MatX oracle = rinekf::test::expm_oracle(xi);
    CHECK((group_exp(xi).matrix() - oracle).norm() < 1e-10 * std::max(1.0, oracle.norm()));
  }
  VecX tiny = VecX::Zero(9);
  tiny << 1e-12, -2e-12, 3e-12, 1, 2, 3, -1, 0.5, 0;
  CHECK((group_exp(tiny).matrix() - rinekf::test::expm_oracle(tiny)).norm() < 1e-14);
  CHECK_THROWS(group_exp(VecX::Zero(7)));
  CHECK_THROWS(group_exp(VecX::Zero(6)));
}

TEST_CASE("group_log inverts group_exp") {
  Rng rng(6);
  for (int i = 0; i < 1000; ++i) {
    const int k = 2 + i % 3;
    VecX xi = rng.vec(3 * (k + 1), 3.0);
    xi.head<3>() = rng.rotation_vector(kPi - 1e-3);
    CHECK((group_log(group_exp(xi)) - xi).norm() < 1e-9);
  }
  VecX near_pi = VecX::Zero(9);
  near_pi.head<3>() = Vec3(0, 0, kPi - 1e-12);
  CHECK_THROWS_AS(group_log(group_exp(near_pi)), std::domain_error);
}

TEST_CASE("group axioms") {
  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    const int k = 2 + i % 3;
    const GroupElement a = rng.element(k), b = rng.element(k), c = rng.element(k);
    CHECK(((a * b) * c).matrix().isApprox((a * (b * c)).matrix(), 1e-12));
    CHECK(((a * b).matrix() - a.matrix() * b.matrix()).norm() < 1e-12);
    CHECK(((a * a.inverse()).matrix() - MatX::Identity(3 + k, 3 + k)).norm() < 1e-12);
    CHECK(((a * GroupElement::identity(k)).matrix() - a.matrix()).norm() == 0.0);
  }
  CHECK_THROWS(GroupElement(1));
}

TEST_CASE("adjoint transports tangent vectors") {
  Rng rng(8);
  for (int i = 0; i < 200; ++i) {
    const int k = 2 + i % 3;
    const GroupElement x = rng.element(k);
    const VecX xi = rng.vec(3 * (k + 1), 1.0);
    const MatX lhs = x.matrix() * rinekf::test::algebra_matrix(xi) * x.inverse().matrix();
    CHECK((lhs - rinekf::test::algebra_matrix(x.adjoint() * xi)).norm() < 1e-12);
    CHECK((x.inverse().adjoint() - x.adjoint().inverse()).norm() < 1e-10);
  }
}

TEST_CASE("right and left errors are related by the adjoint") {
  Rng rng(9);
  for (int i = 0; i < 200; ++i) {
    const int k = 2 + i % 3;
    const GroupElement xbar = rng.element(k);
    VecX xi = rng.vec(3 * (k + 1), 0.5);
    const GroupElement x = group_exp(xi) * xbar;
    const VecX right = right_error(x, xbar);
    const VecX left = group_log(xbar.inverse() * x);
    CHECK((right - xi).norm() < 1e-10);
    CHECK((right - xbar.adjoint() * left).norm() < 1e-10);
  }
}

TEST_CASE("slots can be appended and removed") {
  Rng rng(10);
  GroupElement x = rng.element(2);
  const int slot = x.append_slot(Vec3(1, 2, 3));
  CHECK(slot == 2);
  CHECK(x.k() == 3);
  CHECK(x.slot(2) == Vec3(1, 2, 3));
  x.append_slot(Vec3(4, 5, 6));
  x.remove_slot(2);
  CHECK(x.k() == 3);
  CHECK(x.slot(2) == Vec3(4, 5, 6));
  CHECK_THROWS(x.remove_slot(1));
  CHECK_THROWS(x.remove_slot(5));
}

TEST_CASE("long composition chains stay orthonormal") {
  GroupElement x(2);
  Mat3X t(3, 2);
  t << 0.01, 0, 0, 0.01, 0, 0;
  const GroupElement step(so3_exp(Vec3(0.0123, -0.0456, 0.0789)), t);
  for (int i = 0; i < 5000; ++i) {
    x = x * step;
  }
  CHECK(x.rot().orthogonality_error() < 1e-12);
}
