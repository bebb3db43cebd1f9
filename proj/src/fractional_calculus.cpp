#include "fracdelay/fractional_calculus.hpp"

#include "fracdelay/special_functions.hpp"

#include <array>
#include <cmath>

namespace fracdelay {
namespace {

constexpr std::array<double, 8> kGaussX = {-0.9602898564975363, -0.7966664774136267,
                                           -0.5255324099163290, -0.1834346424956498,
                                           0.1834346424956498,  0.5255324099163290,
                                           0.7966664774136267,  0.9602898564975363};
constexpr std::array<double, 8> kGaussW = {0.1012285362903763, 0.2223810344533745,
                                           0.3137066458778873, 0.3626837833783620,
                                           0.3626837833783620, 0.3137066458778873,
                                           0.2223810344533745, 0.1012285362903763};

Eigen::MatrixXd first_difference(const Eigen::MatrixXd& v, double h) {
  const Eigen::Index n = v.cols();
  Eigen::MatrixXd d(v.rows(), n);
  d.col(0) = (-3.0 * v.col(0) + 4.0 * v.col(1) - v.col(2)) / (2.0 * h);
  for (Eigen::Index i = 1; i + 1 < n; ++i) d.col(i) = (v.col(i + 1) - v.col(i - 1)) / (2.0 * h);
  d.col(n - 1) = (3.0 * v.col(n - 1) - 4.0 * v.col(n - 2) + v.col(n - 3)) / (2.0 * h);
  return d;
}

Eigen::MatrixXd second_difference(const Eigen::MatrixXd& v, double h) {
  const Eigen::Index n = v.cols();
  Eigen::MatrixXd d(v.rows(), n);
  const double h2 = h * h;
  d.col(0) = (2.0 * v.col(0) - 5.0 * v.col(1) + 4.0 * v.col(2) - v.col(3)) / h2;
  for (Eigen::Index i = 1; i + 1 < n; ++i) {
    d.col(i) = (v.col(i + 1) - 2.0 * v.col(i) + v.col(i - 1)) / h2;
  }
  d.col(n - 1) = (2.0 * v.col(n - 1) - 5.0 * v.col(n - 2) + 4.0 * v.col(n - 3) - v.col(n - 4)) / h2;
  return d;
}

void require_samples(const SampledFunction& f, int k) {
  f.validate();
  const std::size_t need = static_cast<std::size_t>(std::max(k, 2)) + 2;
  if (f.size() < need) {
    throw GridError("fractional derivative needs at least " + std::to_string(need) + " samples, got " +
                    std::to_string(f.size()));
  }
}

// Drops the first grid node.
SampledFunction interior(const SampledFunction& f, const Eigen::MatrixXd& values) {
  SampledFunction out;
  out.grid.assign(f.grid.begin() + 1, f.grid.end());
  out.values = values.rightCols(values.cols() - 1);
  return out;
}

}  // namespace

int order_k(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("order alpha must be positive");
  const double fl = std::floor(alpha);
  return fl == alpha ? static_cast<int>(alpha) : static_cast<int>(fl) + 1;
}

void FracOrder::validate() const {
  if (k != order_k(alpha)) throw std::invalid_argument("FracOrder: k inconsistent with alpha");
}

void SampledFunction::validate() const {
  if (static_cast<Eigen::Index>(grid.size()) != values.cols()) {
    throw GridError("SampledFunction: sample count does not match grid");
  }
  if (grid.size() < 2) return;
  const double dt = grid[1] - grid[0];
  if (!(dt > 0.0)) throw GridError("SampledFunction: grid must be strictly increasing");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (std::abs((grid[i] - grid[i - 1]) - dt) > 1e-12 * dt * std::max(1.0, std::abs(grid[i]) / dt * 1e-3)) {
      throw GridError("SampledFunction: grid is not uniform");
    }
  }
}

SampledFunction SampledFunction::uniform(double t0, double dt, std::size_t count, Eigen::Index dims) {
  SampledFunction f;
  f.grid.resize(count);
  for (std::size_t i = 0; i < count; ++i) f.grid[i] = t0 + dt * static_cast<double>(i);
  f.values = Eigen::MatrixXd::Zero(dims, static_cast<Eigen::Index>(count));
  return f;
}

ProductWeights kernel_weights(double gamma, double h, std::size_t panels) {
  ProductWeights w;
  w.fall.resize(panels);
  w.rise.resize(panels);
  const double hg = std::pow(h, gamma);
  for (std::size_t qi = 0; qi < panels; ++qi) {
    const double q = static_cast<double>(qi);
    if (qi < 8) {
      // Closed form in units of h: I0 = int s^(g-1), I1 = int s^g over [q, q+1].
      const double i0 = (std::pow(q + 1.0, gamma) - std::pow(q, gamma)) / gamma;
      const double i1 = (std::pow(q + 1.0, gamma + 1.0) - std::pow(q, gamma + 1.0)) / (gamma + 1.0);
      w.fall[qi] = hg * ((q + 1.0) * i0 - i1);
      w.rise[qi] = hg * (i1 - q * i0);
    } else {
      // Smooth integrand away from the singularity.
      double fall = 0.0;
      double rise = 0.0;
      for (std::size_t g = 0; g < kGaussX.size(); ++g) {
        const double x = 0.5 * (kGaussX[g] + 1.0);
        const double v = 0.5 * kGaussW[g] * std::pow(q + x, gamma - 1.0);
        fall += v * (1.0 - x);
        rise += v * x;
      }
      w.fall[qi] = hg * fall;
      w.rise[qi] = hg * rise;
    }
  }
  return w;
}

Eigen::MatrixXd finite_difference(const Eigen::MatrixXd& values, double h, int k) {
  if (k < 0) throw std::invalid_argument("finite_difference: negative order");
  if (values.cols() < std::max(k, 2) + 2) throw GridError("finite_difference: too few samples");
  Eigen::MatrixXd d = values;
  int remaining = k;
  while (remaining >= 2) {
    d = second_difference(d, h);
    remaining -= 2;
  }
  if (remaining == 1) d = first_difference(d, h);
  return d;
}

Eigen::MatrixXd fractional_integral(const SampledFunction& f, double gamma) {
  f.validate();
  const Eigen::Index n = f.values.cols();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(f.values.rows(), n);
  if (n < 2) return out;
  const double h = f.step();
  const ProductWeights w = kernel_weights(gamma, h, static_cast<std::size_t>(n - 1));
  const double rg = recip_gamma(gamma);
  for (Eigen::Index i = 1; i < n; ++i) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(f.values.rows());
    for (Eigen::Index q = 0; q < i; ++q) {
      acc += w.fall[q] * f.values.col(i - q) + w.rise[q] * f.values.col(i - q - 1);
    }
    out.col(i) = rg * acc;
  }
  return out;
}

SampledFunction caputo_derivative(const SampledFunction& f, const FracOrder& ord) {
  ord.validate();
  require_samples(f, ord.k);
  const double h = f.step();
  const Eigen::MatrixXd dk = finite_difference(f.values, h, ord.k);
  if (ord.is_integer()) return interior(f, dk);
  SampledFunction g{f.grid, dk};
  return interior(f, fractional_integral(g, ord.k - ord.alpha));
}

SampledFunction rl_derivative(const SampledFunction& f, const FracOrder& ord) {
  ord.validate();
  require_samples(f, ord.k);
  const double h = f.step();
  if (ord.is_integer()) return interior(f, finite_difference(f.values, h, ord.k));
  const Eigen::MatrixXd integral = fractional_integral(f, ord.k - ord.alpha);
  return interior(f, finite_difference(integral, h, ord.k));
}

double relation_residual(const SampledFunction& f, const FracOrder& ord, double skip_time) {
  ord.validate();
  require_samples(f, ord.k);
  const double h = f.step();
  if (skip_time < 0.0) skip_time = f.grid.front() + 10.0 * h;

  SampledFunction g = f;
  Eigen::MatrixXd deriv = f.values;
  double fact = 1.0;
  for (int j = 0; j < ord.k; ++j) {
    if (j > 0) {
      deriv = finite_difference(deriv, h, 1);
      fact *= j;
    }
    const Eigen::VectorXd c = deriv.col(0);
    for (std::size_t i = 0; i < f.size(); ++i) {
      const double tau = f.grid[i] - f.grid.front();
      g.values.col(static_cast<Eigen::Index>(i)) -= c * (std::pow(tau, j) / fact);
    }
  }
  const SampledFunction lhs = caputo_derivative(f, ord);
  const SampledFunction rhs = rl_derivative(g, ord);
  double worst = 0.0;
  for (std::size_t i = 0; i < lhs.size(); ++i) {
    if (lhs.grid[i] < skip_time - 1e-12 * h) continue;
    const Eigen::Index c = static_cast<Eigen::Index>(i);
    worst = std::max(worst, (lhs.values.col(c) - rhs.values.col(c)).cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace fracdelay
