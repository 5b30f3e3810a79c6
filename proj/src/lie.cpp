#include "rinekf/lie.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace rinekf {

namespace {

// Coefficients of the closed forms below. Those with a cancellation in the
// closed form switch to their series earlier than kSmallAngle.
constexpr double kSeriesAngle = 1e-2;

// sin(t)/t
double coef_a(double t) {
  if (t < kSmallAngle) {
    const double t2 = t * t;
    return 1.0 - t2 / 6.0 + t2 * t2 / 120.0;
  }
  return std::sin(t) / t;
}

// (1 - cos t)/t^2
double coef_b(double t) {
  if (t < kSmallAngle) {
    const double t2 = t * t;
    return 0.5 - t2 / 24.0 + t2 * t2 / 720.0;
  }
  const double s = std::sin(0.5 * t);
  return 2.0 * s * s / (t * t);
}

// (t - sin t)/t^3
double coef_c(double t) {
  const double t2 = t * t;
  if (t < kSeriesAngle) {
    return 1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0 - t2 * t2 * t2 / 362880.0;
  }
  return (t - std::sin(t)) / (t2 * t);
}

// (t^2/2 + cos t - 1)/t^4
double coef_d(double t) {
  const double t2 = t * t;
  if (t < kSeriesAngle) {
    return 1.0 / 24.0 - t2 / 720.0 + t2 * t2 / 40320.0 - t2 * t2 * t2 / 3628800.0;
  }
  const double s = std::sin(0.5 * t);
  return (0.5 * t2 - 2.0 * s * s) / (t2 * t2);
}

// (1 - t sin t / (2 (1 - cos t)))/t^2, the W^2 coefficient of J_l^-1
double coef_e(double t) {
  const double t2 = t * t;
  if (t < kSeriesAngle) {
    return 1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0 + t2 * t2 * t2 / 1209600.0;
  }
  const double h = 0.5 * t;
  return (1.0 - h * std::cos(h) / std::sin(h)) / t2;
}

}  // namespace

Mat3 hat3(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Vec3 vee3(const Mat3& m) {
  const double asym = (m + m.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-9) {
    throw std::invalid_argument("vee3: matrix is not skew-symmetric (asymmetry " +
                                std::to_string(asym) + ")");
  }
  return Vec3(0.5 * (m(2, 1) - m(1, 2)), 0.5 * (m(0, 2) - m(2, 0)), 0.5 * (m(1, 0) - m(0, 1)));
}

Rotation::Rotation(const Mat3& m) : m_(m) {
  if (!m.allFinite()) {
    throw std::invalid_argument("Rotation: non-finite entries");
  }
  const double ortho = (m.transpose() * m - Mat3::Identity()).norm();
  const double det = m.determinant();
  if (ortho > 1e-9 || std::abs(det - 1.0) > 1e-9) {
    throw std::invalid_argument("Rotation: matrix is not in SO(3) (orthogonality error " +
                                std::to_string(ortho) + ", det " + std::to_string(det) + ")");
  }
}

double Rotation::orthogonality_error() const {
  return (m_.transpose() * m_ - Mat3::Identity()).norm();
}

Rotation Rotation::normalized() const {
  Eigen::JacobiSVD<Mat3> svd(m_, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  return unchecked(svd.matrixU() * d * svd.matrixV().transpose());
}

Rotation so3_exp(const Vec3& w) {
  const double t = w.norm();
  const Mat3 W = hat3(w);
  return Rotation::unchecked(Mat3::Identity() + coef_a(t) * W + coef_b(t) * W * W);
}

Vec3 so3_log(const Rotation& r) {
  const Mat3& m = r.matrix();
  const Vec3 s(0.5 * (m(2, 1) - m(1, 2)), 0.5 * (m(0, 2) - m(2, 0)), 0.5 * (m(1, 0) - m(0, 1)));
  const double sin_t = s.norm();
  const double cos_t = std::clamp(0.5 * (m.trace() - 1.0), -1.0, 1.0);
  const double t = std::atan2(sin_t, cos_t);

  if (t < kSmallAngle) {
    // t / sin t = 1 + t^2/6 + 7 t^4/360
    const double t2 = t * t;
    return (1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0) * s;
  }
  if (cos_t > -0.9) {
    return (t / sin_t) * s;
  }

  // Near pi: sym(R) = cos t I + (1 - cos t) a a^T, take the largest diagonal.
  const Mat3 aat = (0.5 * (m + m.transpose()) - cos_t * Mat3::Identity()) / (1.0 - cos_t);
  int k = 0;
  aat.diagonal().maxCoeff(&k);
  Vec3 axis = aat.col(k) / std::sqrt(std::max(aat(k, k), 0.0));
  axis.normalize();
  if (axis.dot(s) < 0.0) {
    axis = -axis;
  }
  return t * axis;
}

Mat3 so3_left_jacobian(const Vec3& w) {
  const double t = w.norm();
  const Mat3 W = hat3(w);
  return Mat3::Identity() + coef_b(t) * W + coef_c(t) * W * W;
}

Mat3 so3_right_jacobian(const Vec3& w) { return so3_left_jacobian(-w); }

Mat3 so3_left_jacobian_inverse(const Vec3& w) {
  const double t = w.norm();
  const Mat3 W = hat3(w);
  return Mat3::Identity() - 0.5 * W + coef_e(t) * W * W;
}

Mat3 gamma(int n, const Vec3& w, double dt) {
  const Vec3 phi = w * dt;
  const double t = phi.norm();
  const Mat3 W = hat3(phi);
  switch (n) {
    case 0:
      return so3_exp(phi).matrix();
    case 1:
      return dt * (Mat3::Identity() + coef_b(t) * W + coef_c(t) * W * W);
    case 2:
      return dt * dt * (0.5 * Mat3::Identity() + coef_c(t) * W + coef_d(t) * W * W);
    default:
      throw std::invalid_argument("gamma: n must be 0, 1 or 2");
  }
}

GroupElement::GroupElement(int k) : trans_(Mat3X::Zero(3, k)) {
  if (k < 2) {
    throw std::invalid_argument("GroupElement: slot count must be at least 2");
  }
}

GroupElement::GroupElement(const Rotation& rot, const Mat3X& trans) : rot_(rot), trans_(trans) {
  if (trans.cols() < 2) {
    throw std::invalid_argument("GroupElement: slot count must be at least 2");
  }
}

int GroupElement::append_slot(const Vec3& v) {
  trans_.conservativeResize(Eigen::NoChange, trans_.cols() + 1);
  trans_.col(trans_.cols() - 1) = v;
  return static_cast<int>(trans_.cols()) - 1;
}

void GroupElement::remove_slot(int i) {
  if (i < 2 || i >= k()) {
    throw std::out_of_range("GroupElement::remove_slot: slot " + std::to_string(i) +
                            " is not a removable slot");
  }
  Mat3X reduced(3, k() - 1);
  reduced << trans_.leftCols(i), trans_.rightCols(k() - i - 1);
  trans_ = std::move(reduced);
}

GroupElement GroupElement::compose(const GroupElement& other) const {
  if (other.k() != k()) {
    throw std::invalid_argument("GroupElement::compose: slot count mismatch (" +
                                std::to_string(k()) + " vs " + std::to_string(other.k()) + ")");
  }
  GroupElement out(rot_ * other.rot_, trans_ + rot_.matrix() * other.trans_);
  out.since_normalization_ = std::max(since_normalization_, other.since_normalization_) + 1;
  if (out.since_normalization_ >= kRenormalizeEvery || out.rot_.orthogonality_error() > 1e-10) {
    out.rot_ = out.rot_.normalized();
    out.since_normalization_ = 0;
  }
  return out;
}

GroupElement GroupElement::inverse() const {
  const Rotation rt = rot_.inverse();
  GroupElement out(rt, -(rt.matrix() * trans_));
  out.since_normalization_ = since_normalization_;
  return out;
}

MatX GroupElement::matrix() const {
  const int n = 3 + k();
  MatX m = MatX::Identity(n, n);
  m.topLeftCorner<3, 3>() = rot_.matrix();
  m.topRightCorner(3, k()) = trans_;
  return m;
}

MatX GroupElement::adjoint() const {
  const int n = dim();
  MatX ad = MatX::Zero(n, n);
  const Mat3& r = rot_.matrix();
  ad.topLeftCorner<3, 3>() = r;
  for (int i = 0; i < k(); ++i) {
    const int row = 3 * (i + 1);
    ad.block<3, 3>(row, 0) = hat3(trans_.col(i)) * r;
    ad.block<3, 3>(row, row) = r;
  }
  return ad;
}

GroupElement group_exp(const VecX& xi) {
  if (xi.size() < 9 || xi.size() % 3 != 0) {
    throw std::invalid_argument("group_exp: tangent vector length " + std::to_string(xi.size()) +
                                " is not 3(K+1) with K >= 2");
  }
  const int k = static_cast<int>(xi.size()) / 3 - 1;
  const Vec3 w = xi.head<3>();
  const Mat3 jl = so3_left_jacobian(w);
  Mat3X trans(3, k);
  for (int i = 0; i < k; ++i) {
    trans.col(i) = jl * xi.segment<3>(3 * (i + 1));
  }
  return GroupElement(so3_exp(w), trans);
}

VecX group_log(const GroupElement& x) {
  const Vec3 w = so3_log(x.rot());
  if (std::numbers::pi - w.norm() < 1e-9) {
    throw std::domain_error("group_log: rotation angle too close to pi for a unique logarithm");
  }
  const Mat3 jl_inv = so3_left_jacobian_inverse(w);
  VecX xi(x.dim());
  xi.head<3>() = w;
  for (int i = 0; i < x.k(); ++i) {
    xi.segment<3>(3 * (i + 1)) = jl_inv * x.trans().col(i);
  }
  return xi;
}

VecX right_error(const GroupElement& x, const GroupElement& xbar) {
  return group_log(x.compose(xbar.inverse()));
}

}  // namespace rinekf
