#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <vector>

namespace fracdelay {

/// Raised when a grid is too short or not uniform for the requested operator.
class GridError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Number of initial conditions for order alpha: floor(alpha)+1, or alpha itself when integral.
int order_k(double alpha);

struct FracOrder {
  double alpha = 1.0;
  int k = 1;

  static FracOrder from_alpha(double alpha) { return {alpha, order_k(alpha)}; }
  bool is_integer() const { return alpha == static_cast<double>(k); }
  void validate() const;

  friend bool operator==(const FracOrder&, const FracOrder&) = default;
};

/// Vector-valued samples on a uniform grid. values has one column per grid point.
struct SampledFunction {
  std::vector<double> grid;
  Eigen::MatrixXd values;

  std::size_t size() const { return grid.size(); }
  double step() const { return grid.size() > 1 ? grid[1] - grid[0] : 0.0; }
  void validate() const;

  static SampledFunction uniform(double t0, double dt, std::size_t count, Eigen::Index dims);
};

/// Product-integration weights of the kernel s^(gamma-1) against piecewise-linear
/// hats. Panel q covers s in [q h, (q+1) h]; `fall[q]` multiplies the sample at
/// s = q h and `rise[q]` the sample at s = (q+1) h.
struct ProductWeights {
  std::vector<double> fall;
  std::vector<double> rise;
};
ProductWeights kernel_weights(double gamma, double h, std::size_t panels);

/// k-th derivative of uniformly spaced samples: central differences inside,
/// second-order one-sided stencils at both ends.
Eigen::MatrixXd finite_difference(const Eigen::MatrixXd& values, double h, int k);

/// (1/Gamma(gamma)) * int_0^t f(tau) (t - tau)^(gamma-1) dtau at every grid node.
Eigen::MatrixXd fractional_integral(const SampledFunction& f, double gamma);

/// Caputo derivative at grid[1..N] (the origin is dropped).
SampledFunction caputo_derivative(const SampledFunction& f, const FracOrder& ord);

/// Riemann-Liouville derivative at grid[1..N].
SampledFunction rl_derivative(const SampledFunction& f, const FracOrder& ord);

/// max_t |Caputo(f) - RL(f - Taylor_{k-1}(f, 0))| over nodes with t >= skip_time.
/// A negative skip_time selects the default startup layer of 10 steps.
double relation_residual(const SampledFunction& f, const FracOrder& ord, double skip_time = -1.0);

}  // namespace fracdelay
