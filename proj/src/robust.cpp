#include "rinekf/robust.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <string>

namespace rinekf {

RobustCost parse_cost(std::string_view name) {
  if (name == "none") return RobustCost::none;
  if (name == "huber") return RobustCost::huber;
  if (name == "tukey") return RobustCost::tukey;
  throw std::invalid_argument("unknown cost '" + std::string(name) +
                              "' (expected none, huber or tukey)");
}

std::string to_string(RobustCost cost) {
  switch (cost) {
    case RobustCost::none:
      return "none";
    case RobustCost::huber:
      return "huber";
    case RobustCost::tukey:
      return "tukey";
  }
  return "unknown";
}

void RobustConfig::validate() const {
  if (!(c > 0.0)) {
    throw std::invalid_argument("RobustConfig: scale c must be positive");
  }
  if (irls_max_iters < 1) {
    throw std::invalid_argument("RobustConfig: irls_max_iters must be at least 1");
  }
  if (!(irls_tol > 0.0)) {
    throw std::invalid_argument("RobustConfig: irls_tol must be positive");
  }
}

double huber_rho(double r, double c) {
  const double a = std::abs(r);
  return a <= c ? r * r : c * (2.0 * a - c);
}

double huber_weight(double r, double c) {
  const double a = std::abs(r);
  return a <= c ? 1.0 : c / a;
}

double tukey_rho(double r, double c) {
  const double c2_6 = c * c / 6.0;
  if (std::abs(r) > c) {
    return c2_6;
  }
  const double u = 1.0 - (r * r) / (c * c);
  return c2_6 * (1.0 - u * u * u);
}

double tukey_weight(double r, double c) {
  if (std::abs(r) > c) {
    return 0.0;
  }
  const double u = 1.0 - (r * r) / (c * c);
  return u * u;
}

double robust_weight(double r, const RobustConfig& cfg) {
  switch (cfg.cost) {
    case RobustCost::huber:
      return huber_weight(r, cfg.c);
    case RobustCost::tukey:
      return tukey_weight(r, cfg.c);
    case RobustCost::none:
      break;
  }
  return 1.0;
}

double robust_loss(double r, const RobustConfig& cfg) {
  switch (cfg.cost) {
    case RobustCost::huber:
      return huber_rho(r, cfg.c);
    case RobustCost::tukey:
      return 2.0 * tukey_rho(r, cfg.c);
    case RobustCost::none:
      break;
  }
  return r * r;
}

MatX StackedRegression::stacked_design() const {
  const int n = state_dim();
  MatX s(n + meas_dim(), n);
  s << MatX::Identity(n, n), design;
  return s;
}

VecX StackedRegression::stacked_rhs() const {
  VecX b(state_dim() + meas_dim());
  b << VecX::Zero(state_dim()), innovation;
  return b;
}

MatX StackedRegression::stacked_covariance() const {
  const int n = state_dim(), m = meas_dim();
  MatX c = MatX::Zero(n + m, n + m);
  c.topLeftCorner(n, n) = prior_cov;
  c.bottomRightCorner(m, m) = meas_cov;
  return c;
}

void StackedRegression::validate() const {
  const auto n = prior_cov.rows();
  const auto m = design.rows();
  if (prior_cov.cols() != n || design.cols() != n || innovation.size() != m ||
      meas_cov.rows() != m || meas_cov.cols() != m) {
    throw std::invalid_argument("StackedRegression: inconsistent dimensions");
  }
}

MatX cholesky_lower(const MatX& c) {
  Eigen::LLT<MatX> llt(c);
  if (llt.info() != Eigen::Success) {
    llt.compute(c + 1e-12 * MatX::Identity(c.rows(), c.cols()));
    if (llt.info() != Eigen::Success) {
      throw WhiteningError("whiten: covariance is not positive definite");
    }
  }
  return llt.matrixL();
}

WhitenedRegression whiten(const StackedRegression& reg) {
  reg.validate();
  const MatX l = cholesky_lower(reg.stacked_covariance());
  const auto tri = l.triangularView<Eigen::Lower>();
  return {tri.solve(reg.stacked_design()), tri.solve(reg.stacked_rhs())};
}

namespace {

struct WhitenedMeasurements {
  MatX design;  // L_N^-1 H
  VecX rhs;     // L_N^-1 dz
};

WhitenedMeasurements whiten_measurements(const StackedRegression& reg) {
  const MatX l = cholesky_lower(reg.meas_cov);
  const auto tri = l.triangularView<Eigen::Lower>();
  return {tri.solve(reg.design), tri.solve(reg.innovation)};
}

double prior_term(const MatX& prior_cov, const VecX& xi) {
  if (xi.isZero(0.0)) {
    return 0.0;
  }
  return xi.dot(prior_cov.ldlt().solve(xi));
}

}  // namespace

double irls_objective(const StackedRegression& reg, const RobustConfig& cfg, const VecX& xi) {
  const WhitenedMeasurements wm = whiten_measurements(reg);
  const VecX r = wm.rhs - wm.design * xi;
  double total = prior_term(reg.prior_cov, xi);
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    total += robust_loss(r[i], cfg);
  }
  return total;
}

IrlsResult irls_solve(const StackedRegression& reg, const RobustConfig& cfg) {
  reg.validate();
  cfg.validate();
  const int n = reg.state_dim();
  const int m = reg.meas_dim();
  const WhitenedMeasurements wm = whiten_measurements(reg);
  const MatX& p = reg.prior_cov;

  IrlsResult result;
  result.estimate = VecX::Zero(n);
  result.weights = VecX::Ones(m);
  result.gain_times_h = MatX::Zero(n, n);

  auto objective = [&](const VecX& xi) {
    const VecX r = wm.rhs - wm.design * xi;
    double total = prior_term(p, xi);
    for (int i = 0; i < m; ++i) {
      total += robust_loss(r[i], cfg);
    }
    return total;
  };

  VecX xi = VecX::Zero(n);
  for (int iter = 1; iter <= cfg.irls_max_iters; ++iter) {
    const VecX r = wm.rhs - wm.design * xi;
    VecX sqrt_w(m);
    for (int i = 0; i < m; ++i) {
      sqrt_w[i] = std::sqrt(robust_weight(r[i], cfg));
    }

    // Unit-noise Kalman step on the reweighted rows.
    const MatX hw = sqrt_w.asDiagonal() * wm.design;
    const VecX bw = sqrt_w.asDiagonal() * wm.rhs;
    MatX s = hw * p * hw.transpose() + MatX::Identity(m, m);
    s = 0.5 * (s + s.transpose()).eval();
    const VecX eig = Eigen::SelfAdjointEigenSolver<MatX>(s, Eigen::EigenvaluesOnly).eigenvalues();
    if (!(eig.minCoeff() > 0.0) || eig.maxCoeff() / eig.minCoeff() > 1e12) {
      result.ill_conditioned = true;
      break;
    }
    const MatX k = s.llt().solve(hw * p).transpose();
    const VecX xi_next = k * bw;

    const double step = (xi_next - xi).norm();
    xi = xi_next;
    result.estimate = xi;
    result.weights = sqrt_w.cwiseProduct(sqrt_w);
    result.gain_times_h = k * hw;
    result.iterations = iter;
    result.objective.push_back(objective(xi));

    if (cfg.cost == RobustCost::none ||
        step <= cfg.irls_tol * std::max(xi.norm(), std::numeric_limits<double>::min())) {
      result.converged = true;
      break;
    }
  }
  return result;
}

UpdateOutcome robust_update(const FilterState& state, const std::vector<LegMeasurement>& legs,
                            const FilterConfig& filter_cfg, const RobustConfig& cfg) {
  UpdateOutcome outcome;
  if (legs.empty()) {
    outcome.state = state;
    outcome.status = UpdateStatus::no_measurements;
    outcome.correction = VecX::Zero(state.dim());
    return outcome;
  }
  const MeasurementStack stack = build_measurements(state, legs, filter_cfg);
  StackedRegression reg{state.cov, stack.h, stack.innovation, stack.noise};
  const IrlsResult sol = irls_solve(reg, cfg);
  outcome.irls_iterations = sol.iterations;
  outcome.irls_converged = sol.converged;
  outcome.irls_ill_conditioned = sol.ill_conditioned;
  if (sol.iterations == 0) {
    outcome.state = state;
    outcome.status = UpdateStatus::rejected_ill_conditioned;
    outcome.correction = VecX::Zero(state.dim());
    return outcome;
  }

  const int n = state.dim();
  const MatX cov = (MatX::Identity(n, n) - sol.gain_times_h) * state.cov;
  outcome.state = retract(state, sol.estimate, cov);
  outcome.correction = sol.estimate;
  return outcome;
}

}  // namespace rinekf
