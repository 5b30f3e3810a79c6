/**
 * @file robust.hpp
 * @brief M-estimator replacement for the Kalman measurement update.
 *
 * The Kalman update is the weighted least-squares solution of
 *
 *     [0; dz] = [I; H] xi + e,   e ~ N(0, blkdiag(P, N)).
 *
 * After whitening by the Cholesky factor of the noise covariance, the
 * measurement residuals are reweighted one scalar at a time with a Huber or
 * Tukey weight and the problem is solved by IRLS. Prior rows keep weight 1.
 * The scale c is expressed in whitened (unit-variance) residual units.
 */
#pragma once

#include "rinekf/inekf.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace rinekf {

enum class RobustCost { none, huber, tukey };

RobustCost parse_cost(std::string_view name);
std::string to_string(RobustCost cost);

struct RobustConfig {
  RobustCost cost = RobustCost::none;
  double c = 9.0;
  int irls_max_iters = 20;
  double irls_tol = 1e-8;

  void validate() const;
};

/// rho(r) = r^2 for |r| <= c, c (2|r| - c) beyond.
double huber_rho(double r, double c);
/// 1 inside, c/|r| outside.
double huber_weight(double r, double c);

/// rho(r) = c^2/6 (1 - (1 - r^2/c^2)^3) for |r| <= c, c^2/6 beyond.
double tukey_rho(double r, double c);
/// (1 - r^2/c^2)^2 inside, 0 outside.
double tukey_weight(double r, double c);

/// IRLS weight of one whitened residual.
double robust_weight(double r, const RobustConfig& cfg);

/// Loss whose gradient is 2 * weight(r) * r, so that IRLS decreases it monotonically.
double robust_loss(double r, const RobustConfig& cfg);

/// Stacked regression [0; dz] = [I; H] xi + e with cov(e) = blkdiag(prior_cov, meas_cov).
struct StackedRegression {
  MatX prior_cov;
  MatX design;   // H
  VecX innovation;
  MatX meas_cov;

  int state_dim() const { return static_cast<int>(prior_cov.rows()); }
  int meas_dim() const { return static_cast<int>(design.rows()); }

  MatX stacked_design() const;
  VecX stacked_rhs() const;
  MatX stacked_covariance() const;

  /// Throws std::invalid_argument on inconsistent dimensions.
  void validate() const;
};

struct WhitenedRegression {
  MatX design;
  VecX rhs;
};

class WhiteningError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Lower Cholesky factor, retrying once with 1e-12 jitter. Throws WhiteningError.
MatX cholesky_lower(const MatX& c);

/// (L^-1 S, L^-1 b) with C = L L^T.
WhitenedRegression whiten(const StackedRegression& reg);

struct IrlsResult {
  VecX estimate;
  VecX weights;          // final weights of the whitened measurement rows
  MatX gain_times_h;     // K~ H implied by the final weights
  int iterations = 0;
  bool converged = false;
  bool ill_conditioned = false;
  std::vector<double> objective;  // objective after each iteration
};

/**
 * Solves min xi^T P^-1 xi + sum_k loss(r_k) with r = L_N^-1 (dz - H xi), starting
 * from xi = 0. Each iteration is solved in gain form, which equals the
 * reweighted normal equations without inverting P.
 */
IrlsResult irls_solve(const StackedRegression& reg, const RobustConfig& cfg);

/// Objective of irls_solve at xi.
double irls_objective(const StackedRegression& reg, const RobustConfig& cfg, const VecX& xi);

UpdateOutcome robust_update(const FilterState& state, const std::vector<LegMeasurement>& legs,
                            const FilterConfig& filter_cfg, const RobustConfig& cfg);

}  // namespace rinekf
