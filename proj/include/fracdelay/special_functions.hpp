#pragma once

#include <Eigen/Dense>

#include <span>
#include <stdexcept>
#include <vector>

namespace fracdelay {

/// Parameters (alpha, beta) of the two-parameter Mittag-Leffler function.
struct MLParams {
  double alpha = 1.0;
  double beta = 1.0;

  void validate() const;
};

/// Stopping rules shared by the series and asymptotic evaluators.
struct SeriesControl {
  double rel_tol = 1e-15;
  int max_terms = 2000;
  int asym_N = 12;

  void validate() const;
};

/// Thrown when a series evaluation exhausts max_terms before reaching rel_tol.
class MLConvergenceError : public std::runtime_error {
 public:
  MLConvergenceError(const std::string& what, double partial, double error_estimate)
      : std::runtime_error(what), partial_(partial), error_estimate_(error_estimate) {}
  double partial() const noexcept { return partial_; }
  double error_estimate() const noexcept { return error_estimate_; }

 private:
  double partial_;
  double error_estimate_;
};

/// Thrown when the asymptotic expansion is requested outside its regime.
class MLRegimeError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Gamma function. Throws std::domain_error at poles and std::overflow_error
/// when the result is not representable.
double gamma(double x);

/// 1/Gamma(x); exactly zero at the poles 0, -1, -2, ...
double recip_gamma(double x);

/// E_{alpha,beta}(z) for real z. Picks the power series, the negative-axis
/// algebraic expansion or a Laplace-contour quadrature depending on z.
double ml_scalar(const MLParams& p, double z, const SeriesControl& ctl = {});

/// Plain power series only; no regime switching. Throws MLConvergenceError.
double ml_series(const MLParams& p, double z, const SeriesControl& ctl = {});

/// Large-|z| expansion for 0 < alpha < 2 truncated after ctl.asym_N terms.
double ml_asymptotic(const MLParams& p, double z, const SeriesControl& ctl = {});

/// E_{alpha,beta}(A) for a real square matrix.
Eigen::MatrixXd ml_matrix(const MLParams& p, const Eigen::MatrixXd& A,
                          const SeriesControl& ctl = {});

/// E_{alpha,beta_i}(A) for several beta sharing one factorisation of A.
std::vector<Eigen::MatrixXd> ml_matrix_multi(double alpha, std::span<const double> betas,
                                             const Eigen::MatrixXd& A,
                                             const SeriesControl& ctl = {});

/// Scalar majorant E_{alpha,beta}(norm_A * t^alpha) of ||E_{alpha,beta}(A t^alpha)||.
double ml_norm_bound(const MLParams& p, double norm_A, double t, const SeriesControl& ctl = {});

}  // namespace fracdelay
