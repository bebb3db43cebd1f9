#include "fracdelay/detail/volterra.hpp"
#include "fracdelay/solver.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <cstdio>

namespace fracdelay {
namespace {

using detail::PreparedSpec;

enum class Route { Phi, Psi, Classical };

double factorial(int j) {
  double f = 1.0;
  for (int i = 2; i <= j; ++i) f *= i;
  return f;
}

std::size_t history_steps(const SystemSpec& s, double dt) {
  const double h = s.max_delay();
  return h > 0.0 ? static_cast<std::size_t>(std::ceil(h / dt - 1e-9)) : 0;
}

Trajectory assemble(const SystemSpec& s, const InitialData& init, const MatrixSeries& X, double dt) {
  Trajectory tr;
  const std::size_t M = history_steps(s, dt);
  const std::size_t N = X.size() - 1;
  tr.history_steps = M;
  tr.grid.resize(M + N + 1);
  tr.states.resize(s.n(), static_cast<Eigen::Index>(M + N + 1));
  for (std::size_t i = 0; i < M + N + 1; ++i) {
    const double t = (static_cast<double>(i) - static_cast<double>(M)) * dt;
    tr.grid[i] = t;
    tr.states.col(static_cast<Eigen::Index>(i)) = i < M ? init.phi[0](t) : Eigen::VectorXd(X[i - M]);
  }
  tr.meta.dt = dt;
  tr.meta.deriv = s.deriv;
  tr.meta.point_values = init.point_values();
  return tr;
}

detail::History phi0_history(const InitialData& init) {
  return [&init](double s, bool left) -> Eigen::MatrixXd { return left ? init.phi[0].left(s) : init.phi[0](s); };
}

// B u(t_m) plus, in literal mode, the phi_j (j >= 1) contributions of the
// initial-function convolution.
Eigen::VectorXd external_forcing(const PreparedSpec& ps, const InitialData& init, const ControlSignal& u,
                                 double t, bool left, bool literal) {
  Eigen::VectorXd f = ps.spec.B * (left ? u.left(t) : u(t));
  if (!literal) return f;
  for (const auto& term : ps.terms) {
    const double sh = t - term.h;
    const bool inside = sh < 0.0 || (left && std::abs(sh) <= 1e-12 * term.h);
    if (!inside) continue;
    for (std::size_t j = 1; j < init.phi.size(); ++j) f += term.A * init.phi[j](std::min(sh, 0.0));
  }
  return f;
}

Eigen::VectorXd point_term(const std::vector<MatrixSeries>& tables, const InitialData& init, std::size_t i, double t,
                           bool rl) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(tables.front().rows());
  for (std::size_t j = 0; j < tables.size(); ++j) {
    const Eigen::VectorXd xj = init.point_value(j);
    x += tables[j][i] * xj;
    if (rl) x -= (std::pow(t, static_cast<double>(j)) / factorial(static_cast<int>(j))) * xj;
  }
  return x;
}

MatrixSeries march_phi(const PreparedSpec& ps, const EvolutionOperators& ops, const InitialData& init,
                       const ControlSignal& u, bool rl, bool literal) {
  return detail::march(
      ps, ops, 1,
      [&](std::size_t i) -> Eigen::MatrixXd { return point_term(ops.phi_j0, init, i, ops.time(i), rl); },
      phi0_history(init),
      [&](std::size_t m, bool left) -> Eigen::MatrixXd {
        return external_forcing(ps, init, u, ops.time(m), left, literal);
      });
}

MatrixSeries quadrature_psi(const PreparedSpec& ps, const EvolutionOperators& ops, const InitialData& init,
                            const ControlSignal& u, bool rl, bool literal) {
  const std::size_t N = ops.steps;
  const Eigen::Index n = ps.spec.n();
  const double alpha = ops.alpha;

  // G(tau) = B u(tau) + sum_i A_i phi_0(tau - h_i) for tau < h_i.
  std::vector<Eigen::VectorXd> Gm(N + 1), Gp(N + 1);
  for (std::size_t m = 0; m <= N; ++m) {
    const double t = ops.time(m);
    for (int side = 0; side < 2; ++side) {
      const bool left = side == 0;
      Eigen::VectorXd g = external_forcing(ps, init, u, t, left, literal);
      for (const auto& term : ps.terms) {
        const double sh = t - term.h;
        const bool at_jump = term.snapped ? static_cast<long>(m) == term.steps : sh == 0.0;
        if ((term.snapped && static_cast<long>(m) < term.steps) || (!term.snapped && sh < 0.0)) {
          g += term.A * (left ? init.phi[0].left(sh) : init.phi[0](sh));
        } else if (at_jump && left) {
          g += term.A * init.phi[0].left(0.0);
        }
      }
      (left ? Gm : Gp)[m] = std::move(g);
    }
  }

  // Stieltjes weights against K = int Psi_a; the first panel follows K ~ s^alpha.
  std::vector<Eigen::MatrixXd> wf(N), wr(N);
  for (std::size_t q = 0; q < N; ++q) {
    const Eigen::MatrixXd dK = ops.psi_a_integral[q + 1] - ops.psi_a_integral[q];
    const double f = q == 0 ? 1.0 / (1.0 + alpha) : 0.5;
    wf[q] = f * dK;
    wr[q] = (1.0 - f) * dK;
  }

  MatrixSeries X(n, 1, N + 1);
  for (std::size_t i = 0; i <= N; ++i) {
    Eigen::VectorXd x = point_term(ops.psi_j0, init, i, ops.time(i), rl);
    for (std::size_t q = 0; q < i; ++q) x.noalias() += wf[q] * Gm[i - q] + wr[q] * Gp[i - q - 1];
    X[i] = x;
  }
  return X;
}

MatrixSeries march_classical(const PreparedSpec& ps, double dt, std::size_t N, const InitialData& init,
                             const ControlSignal& u) {
  const Eigen::Index n = ps.spec.n();
  const Eigen::MatrixXd& A0 = ps.spec.A[0];
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(3 * n, 3 * n);
  C.topLeftCorner(n, n) = A0;
  C.block(0, n, n, n).setIdentity();
  C.block(n, 2 * n, n, n).setIdentity();
  const Eigen::MatrixXd E = (C * dt).exp();
  const Eigen::MatrixXd E11 = E.topLeftCorner(n, n);
  const Eigen::MatrixXd E12 = E.block(0, n, n, n);
  const Eigen::MatrixXd E13 = E.block(0, 2 * n, n, n);

  const detail::History history = phi0_history(init);
  MatrixSeries X(n, 1, N + 1);
  X[0] = init.point_value(0);
  auto forcing = [&](std::size_t m, std::size_t known, bool left) {
    const double t = static_cast<double>(m) * dt;
    Eigen::VectorXd f = ps.spec.B * (left ? u.left(t) : u(t));
    for (const auto& term : ps.terms) {
      const long idx = static_cast<long>(m) - term.steps;
      f += term.A * detail::delayed_value(X, known, dt, t - term.h, idx, term.snapped, left, history);
    }
    return f;
  };
  for (std::size_t i = 0; i < N; ++i) {
    const Eigen::VectorXd f0 = forcing(i, i + 1, false);
    const Eigen::VectorXd f1 = forcing(i + 1, i + 1, true);
    X[i + 1] = E11 * Eigen::VectorXd(X[i]) + E12 * f0 + E13 * ((f1 - f0) / dt);
  }
  return X;
}

Trajectory run(Route route, const SystemSpec& s, const InitialData& init, const ControlSignal& u, double T,
               double dt, const SolverOptions& opt, bool rl) {
  validate_problem(s, init, u);
  const PreparedSpec ps = detail::prepare(s, dt, opt);
  MatrixSeries X;
  std::string method;
  switch (route) {
    case Route::Phi: {
      const EvolutionOperators ops = phi_operators(s, T, dt, opt);
      X = march_phi(ps, ops, init, u, rl, opt.literal_initial_sum);
      method = rl ? "phi-rl" : "phi";
      break;
    }
    case Route::Psi: {
      const EvolutionOperators ops = psi_operators(s, T, dt, opt);
      X = quadrature_psi(ps, ops, init, u, rl, opt.literal_initial_sum);
      method = rl ? "psi-rl" : "psi";
      break;
    }
    case Route::Classical:
      X = march_classical(ps, dt, detail::step_count(T, dt), init, u);
      method = "classical";
      break;
  }
  Trajectory tr = assemble(s, init, X, dt);
  tr.meta.method = method;
  tr.meta.deriv = rl ? DerivativeKind::RiemannLiouville : DerivativeKind::Caputo;
  tr.meta.interpolated_delays = ps.interpolated;
  tr.meta.literal_initial_sum = opt.literal_initial_sum;
  return tr;
}

// A grid of spacing dt2 is usable for the estimate when it keeps the delay
// alignment of the primary grid.
bool compatible_grid(const SystemSpec& s, double dt, double dt2, const SolverOptions& opt) {
  try {
    return detail::prepare(s, dt2, opt).interpolated == detail::prepare(s, dt, opt).interpolated;
  } catch (const SolverError&) {
    return false;
  }
}

Trajectory solve_with_estimate(Route route, const SystemSpec& s, const InitialData& init, const ControlSignal& u,
                               double T, double dt, const SolverOptions& opt, bool rl) {
  Trajectory fine = run(route, s, init, u, T, dt, opt, rl);
  const double scale = std::max(1.0, fine.forward().cwiseAbs().maxCoeff());
  double est = 0.0;
  if (opt.estimate_error) {
    const bool coarse_ok = T >= 2.0 * dt && compatible_grid(s, dt, 2.0 * dt, opt);
    const double dt2 = coarse_ok ? 2.0 * dt : 0.5 * dt;
    const Trajectory other = run(route, s, init, u, T, dt2, opt, rl);
    const Eigen::MatrixXd a = fine.forward();
    const Eigen::MatrixXd b = other.forward();
    if (coarse_ok) {
      for (Eigen::Index i = 0; 2 * i < a.cols() && i < b.cols(); ++i) {
        est = std::max(est, (a.col(2 * i) - b.col(i)).cwiseAbs().maxCoeff());
      }
    } else {
      for (Eigen::Index i = 0; i < a.cols() && 2 * i < b.cols(); ++i) {
        est = std::max(est, (a.col(i) - b.col(2 * i)).cwiseAbs().maxCoeff());
      }
    }
  }
  fine.meta.error_estimate = est;
  fine.meta.tolerance = est + 1e-12 * scale;
  return fine;
}

}  // namespace

Trajectory solve_caputo(const SystemSpec& s, const InitialData& init, const ControlSignal& u, double T, double dt,
                        const SolverOptions& opt) {
  return solve_with_estimate(Route::Phi, s, init, u, T, dt, opt, false);
}

Trajectory solve_rl(const SystemSpec& s, const InitialData& init, const ControlSignal& u, double T, double dt,
                    const SolverOptions& opt) {
  // For integer orders the two derivatives coincide.
  Trajectory tr = solve_with_estimate(Route::Phi, s, init, u, T, dt, opt, !s.order.is_integer());
  tr.meta.deriv = DerivativeKind::RiemannLiouville;
  return tr;
}

Trajectory solve_via_psi(const SystemSpec& s, const InitialData& init, const ControlSignal& u, double T, double dt,
                         const SolverOptions& opt) {
  const bool rl = s.deriv == DerivativeKind::RiemannLiouville;
  Trajectory tr = solve_with_estimate(Route::Psi, s, init, u, T, dt, opt, rl && !s.order.is_integer());
  tr.meta.deriv = s.deriv;
  return tr;
}

Trajectory solve_classical(const SystemSpec& s, const InitialData& init, const ControlSignal& u, double T, double dt,
                           const SolverOptions& opt) {
  if (s.order.alpha != 1.0) throw std::invalid_argument("solve_classical requires alpha = 1");
  return solve_with_estimate(Route::Classical, s, init, u, T, dt, opt, false);
}

Trajectory solve(const SystemSpec& s, const InitialData& init, const ControlSignal& u, double T, double dt,
                 const SolverOptions& opt) {
  return s.deriv == DerivativeKind::Caputo ? solve_caputo(s, init, u, T, dt, opt) : solve_rl(s, init, u, T, dt, opt);
}

Trajectory rl_correction(const SystemSpec& s, const InitialData& init, double T, double dt, const SolverOptions& opt) {
  validate_problem(s, init, zero_input(s));
  const PreparedSpec ps = detail::prepare(s, dt, opt);
  const EvolutionOperators ops = phi_operators(s, T, dt, opt);
  const Eigen::Index n = s.n();
  const bool active = !s.order.is_integer();
  const MatrixSeries D = detail::march(
      ps, ops, 1,
      [&](std::size_t i) -> Eigen::MatrixXd {
        Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
        if (!active) return d;
        for (std::size_t j = 0; j < init.phi.size(); ++j) {
          d -= (std::pow(ops.time(i), static_cast<double>(j)) / factorial(static_cast<int>(j))) * init.point_value(j);
        }
        return d;
      },
      [n](double, bool) -> Eigen::MatrixXd { return Eigen::VectorXd::Zero(n); }, {});
  InitialData zero = zero_initial_data(s);
  Trajectory tr = assemble(s, zero, D, dt);
  tr.meta.method = "rl-correction";
  tr.meta.deriv = DerivativeKind::RiemannLiouville;
  tr.meta.point_values = init.point_values();
  tr.meta.interpolated_delays = ps.interpolated;
  return tr;
}

double max_deviation(const Trajectory& a, const Trajectory& b) {
  if (a.n() != b.n()) throw std::invalid_argument("max_deviation: state dimensions differ");
  if (std::abs(a.meta.dt - b.meta.dt) > 1e-12 * a.meta.dt) throw std::invalid_argument("max_deviation: grids differ");
  const Eigen::MatrixXd fa = a.forward();
  const Eigen::MatrixXd fb = b.forward();
  const Eigen::Index cols = std::min(fa.cols(), fb.cols());
  if (cols == 0) return 0.0;
  return (fa.leftCols(cols) - fb.leftCols(cols)).cwiseAbs().maxCoeff();
}

void write_csv(std::ostream& os, const Trajectory& traj, bool include_history) {
  os << "t";
  for (Eigen::Index r = 0; r < traj.n(); ++r) os << ",x" << (r + 1);
  os << "\n";
  char buf[64];
  const std::size_t first = include_history ? 0 : traj.zero_index();
  for (std::size_t i = first; i < traj.grid.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", traj.grid[i]);
    os << buf;
    for (Eigen::Index r = 0; r < traj.n(); ++r) {
      std::snprintf(buf, sizeof buf, ",%.17g", traj.states(r, static_cast<Eigen::Index>(i)));
      os << buf;
    }
    os << "\n";
  }
}

}  // namespace fracdelay
