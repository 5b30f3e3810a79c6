/**
 * @file lie.hpp
 * @brief SO(3) and SE_K(3) group operations for the invariant filter.
 *
 * SE_K(3) elements are a rotation together with K translation-like 3-vectors
 * that all transform with the same rotation. For the filter state the slots
 * are fixed: slot 0 is the velocity, slot 1 the position and slots 2..K-1
 * the positions of the feet in contact.
 *
 * Tangent vectors are laid out as [xi_R | xi_0 | xi_1 | ... | xi_{K-1}].
 */
#pragma once

#include <Eigen/Core>
#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>

namespace rinekf {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;
using Mat3X = Eigen::Matrix<double, 3, Eigen::Dynamic>;

/// Below this angle exp/log/Jacobians use their Taylor expansions.
inline constexpr double kSmallAngle = 1e-7;

/// Skew-symmetric matrix of v, so that hat3(a) * b == a.cross(b).
Mat3 hat3(const Vec3& v);

/// Inverse of hat3. Throws std::invalid_argument if m is not skew-symmetric.
Vec3 vee3(const Mat3& m);

/**
 * Element of SO(3), stored as an orthonormal 3x3 matrix.
 *
 * The checked constructor rejects matrices that are not orthonormal with
 * positive determinant (tolerance 1e-9 Frobenius). Results of group operations
 * are built through the unchecked path.
 */
class Rotation {
public:
  Rotation() : m_(Mat3::Identity()) {}
  explicit Rotation(const Mat3& m);

  static Rotation unchecked(const Mat3& m) {
    Rotation r;
    r.m_ = m;
    return r;
  }

  const Mat3& matrix() const { return m_; }
  Rotation inverse() const { return unchecked(m_.transpose()); }
  Rotation operator*(const Rotation& other) const { return unchecked(m_ * other.m_); }
  Vec3 operator*(const Vec3& v) const { return m_ * v; }

  /// Frobenius norm of R^T R - I.
  double orthogonality_error() const;

  /// Closest rotation in the Frobenius sense (polar decomposition).
  Rotation normalized() const;

private:
  Mat3 m_;
};

Rotation so3_exp(const Vec3& w);

/// Rotation vector of r. Uses an axis extraction from the symmetric part near pi.
Vec3 so3_log(const Rotation& r);

Mat3 so3_left_jacobian(const Vec3& w);
Mat3 so3_right_jacobian(const Vec3& w);
Mat3 so3_left_jacobian_inverse(const Vec3& w);

/**
 * Gamma_n(w, dt) = sum_k (w^)^k dt^(k+n) / (k+n)!  for n in {0, 1, 2}.
 *
 * Gamma_0 is the rotation exp(w dt); Gamma_1 and Gamma_2 integrate a constant
 * body-frame acceleration once and twice under a constant angular rate.
 */
Mat3 gamma(int n, const Vec3& w, double dt);

/**
 * Element of SE_K(3).
 *
 * Composition follows (R1, x1)(R2, x2) = (R1 R2, x1 + R1 * x2), with R1 applied
 * to every translation slot of x2. The rotation is re-orthonormalized after
 * every kRenormalizeEvery compositions, or earlier if its drift exceeds 1e-10.
 */
class GroupElement {
public:
  static constexpr std::uint32_t kRenormalizeEvery = 1000;

  explicit GroupElement(int k = 2);
  GroupElement(const Rotation& rot, const Mat3X& trans);

  static GroupElement identity(int k) { return GroupElement(k); }

  int k() const { return static_cast<int>(trans_.cols()); }
  int dim() const { return 3 * (k() + 1); }

  const Rotation& rot() const { return rot_; }
  const Mat3X& trans() const { return trans_; }
  Vec3 slot(int i) const { return trans_.col(i); }

  Vec3 velocity() const { return trans_.col(0); }
  Vec3 position() const { return trans_.col(1); }

  void set_rot(const Rotation& r) { rot_ = r; }
  void set_slot(int i, const Vec3& v) { trans_.col(i) = v; }

  /// Appends a translation slot, returning its index.
  int append_slot(const Vec3& v);
  void remove_slot(int i);

  GroupElement compose(const GroupElement& other) const;
  GroupElement operator*(const GroupElement& other) const { return compose(other); }
  GroupElement inverse() const;

  /// (3+K)x(3+K) homogeneous embedding.
  MatX matrix() const;

  MatX adjoint() const;

  std::uint32_t compositions_since_normalization() const { return since_normalization_; }

private:
  Rotation rot_;
  Mat3X trans_;
  std::uint32_t since_normalization_ = 0;
};

/// exp of a tangent vector of length 3(K+1). Throws on a malformed length.
GroupElement group_exp(const VecX& xi);

/// Throws std::domain_error when the rotation angle is too close to pi.
VecX group_log(const GroupElement& x);

/// Right-invariant error coordinates: log(x * xbar^-1).
VecX right_error(const GroupElement& x, const GroupElement& xbar);

}  // namespace rinekf
