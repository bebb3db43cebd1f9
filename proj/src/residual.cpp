#include "fracdelay/fractional_calculus.hpp"
#include "fracdelay/solver.hpp"
#include "fracdelay/special_functions.hpp"

#include <cmath>
#include <utility>
#include <vector>

namespace fracdelay {
namespace {

// Linear interpolation on the trajectory grid (which includes the history).
Eigen::VectorXd value_at(const Trajectory& tr, double t) {
  const double dt = tr.meta.dt;
  const double pos = (t - tr.grid.front()) / dt;
  const double last = static_cast<double>(tr.grid.size() - 1);
  if (pos <= 0.0) return tr.at(0);
  if (pos >= last) return tr.at(tr.grid.size() - 1);
  const double r = std::round(pos);
  if (std::abs(pos - r) <= 1e-9) return tr.at(static_cast<std::size_t>(r));
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const double w = pos - static_cast<double>(lo);
  return (1.0 - w) * tr.at(lo) + w * tr.at(lo + 1);
}

}  // namespace

double verify_residual(const SystemSpec& s, Trajectory& traj, const ControlSignal& u, double layer) {
  const double dt = traj.meta.dt;
  if (layer < 0.0) layer = 5.0 * dt;
  const std::size_t z = traj.zero_index();
  const std::size_t N = traj.forward_steps();

  SampledFunction y = SampledFunction::uniform(0.0, dt, N + 1, s.n());
  y.values = traj.forward();
  if (traj.meta.deriv == DerivativeKind::Caputo) {
    // Caputo derivative of x is the RL derivative of x minus its Taylor polynomial at 0.
    double fact = 1.0;
    for (std::size_t j = 0; j < traj.meta.point_values.size(); ++j) {
      if (j > 0) fact *= static_cast<double>(j);
      const Eigen::VectorXd& c = traj.meta.point_values[j];
      for (std::size_t i = 0; i <= N; ++i) {
        y.values.col(static_cast<Eigen::Index>(i)) -= c * (std::pow(y.grid[i], static_cast<double>(j)) / fact);
      }
    }
  }
  // Remove the leading c t^alpha / Gamma(1 + alpha) behaviour at 0 and add back its
  // exact derivative c; linearity keeps the estimate of D^alpha x consistent while
  // the stencils only see the smoother remainder.
  Eigen::VectorXd lead = Eigen::VectorXd::Zero(s.n());
  if (!s.order.is_integer()) {
    lead = s.B * u(0.0);
    for (std::size_t k = 0; k < s.delays.size(); ++k) {
      lead += s.A[k] * (s.delays[k] == 0.0 ? traj.at(z) : value_at(traj, -s.delays[k]));
    }
    const double rg = recip_gamma(1.0 + s.order.alpha);
    for (std::size_t i = 0; i <= N; ++i) {
      y.values.col(static_cast<Eigen::Index>(i)) -= lead * (rg * std::pow(y.grid[i], s.order.alpha));
    }
  }
  // Input jumps restart the same layer at their own times.
  const double T = static_cast<double>(N) * dt;
  std::vector<std::pair<double, Eigen::VectorXd>> jumps;
  for (double tau : u.u.jumps(0.0, T)) {
    if (tau > 0.0) jumps.emplace_back(tau, s.B * (u(tau) - u.left(tau)));
  }
  if (!s.order.is_integer()) {
    const double rg = recip_gamma(1.0 + s.order.alpha);
    for (const auto& [tau, J] : jumps) {
      for (std::size_t i = 0; i <= N; ++i) {
        if (y.grid[i] > tau) y.values.col(static_cast<Eigen::Index>(i)) -= J * (rg * std::pow(y.grid[i] - tau, s.order.alpha));
      }
    }
  }
  SampledFunction d = rl_derivative(y, s.order);
  d.values.colwise() += lead;
  if (!s.order.is_integer()) {
    for (const auto& [tau, J] : jumps) {
      for (std::size_t i = 0; i < d.size(); ++i) {
        if (d.grid[i] >= tau) d.values.col(static_cast<Eigen::Index>(i)) += J;
      }
    }
  }

  // The solution restarts a weakly singular layer at t = 0, at every input jump, and one
  // delay after each of them.
  auto in_layer = [&](double t) {
    if (t < layer - 1e-12 * dt) return true;
    for (double h : s.delays) {
      if (h > 0.0 && t >= h - 1e-12 * dt && t < h + layer - 1e-12 * dt) return true;
    }
    for (const auto& jump : jumps) {
      if (t >= jump.first - 1e-12 * dt && t < jump.first + layer - 1e-12 * dt) return true;
      for (double h : s.delays) {
        const double at = jump.first + h;
        if (h > 0.0 && t >= at - 1e-12 * dt && t < at + layer - 1e-12 * dt) return true;
      }
    }
    return false;
  };

  double worst = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double t = d.grid[i];
    if (in_layer(t)) continue;
    Eigen::VectorXd r = d.values.col(static_cast<Eigen::Index>(i)) - s.B * u(t);
    for (std::size_t k = 0; k < s.delays.size(); ++k) {
      r -= s.A[k] * (s.delays[k] == 0.0 ? traj.at(z + i + 1) : value_at(traj, t - s.delays[k]));
    }
    worst = std::max(worst, r.cwiseAbs().maxCoeff());
  }
  traj.meta.residual = worst;
  return worst;
}

}  // namespace fracdelay
