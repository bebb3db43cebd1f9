#include "fracdelay/detail/volterra.hpp"
#include "fracdelay/special_functions.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <sstream>

namespace fracdelay {
namespace detail {
namespace {

// Panels below this index use closed-form antiderivatives of the kernel;
// beyond it the kernel is smooth on each panel and Gauss quadrature is used.
constexpr std::size_t kClosedFormPanels = 16;

constexpr std::array<double, 4> kGaussX = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                                           0.8611363115940526};
constexpr std::array<double, 4> kGaussW = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                                           0.3478548451374538};

// C += A * B for column-major blocks; cheaper than Eigen's dynamic GEMM at n <= 4.
inline void gemm_acc(const double* a, const double* b, double* c, Eigen::Index n, Eigen::Index cols) {
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index l = 0; l < n; ++l) {
      const double blj = b[l + j * n];
      if (blj == 0.0) continue;
      const double* acol = a + l * n;
      double* ccol = c + j * n;
      for (Eigen::Index i = 0; i < n; ++i) ccol[i] += acol[i] * blj;
    }
  }
}

}  // namespace

PreparedSpec prepare(const SystemSpec& s, double dt, const SolverOptions& opt) {
  s.validate();
  PreparedSpec ps;
  ps.spec = opt.group_repeated_delays ? grouped_spec(s) : s;
  SystemSpec& sp = ps.spec;
  const double zero_tol = kDelayMergeTolerance * sp.max_delay();
  SystemSpec folded = sp;
  folded.delays = {0.0};
  folded.A = {sp.A[0]};
  for (std::size_t i = 1; i < sp.delays.size(); ++i) {
    if (sp.delays[i] <= zero_tol) {
      folded.A[0] += sp.A[i];
    } else {
      folded.delays.push_back(sp.delays[i]);
      folded.A.push_back(sp.A[i]);
    }
  }
  sp = folded;
  for (std::size_t i = 1; i < sp.delays.size(); ++i) {
    const double h = sp.delays[i];
    if (dt > h * (1.0 + 1e-12)) {
      std::ostringstream msg;
      msg << "step dt=" << dt << " exceeds the smallest positive delay " << h << "; reduce dt";
      throw SolverError(msg.str());
    }
    DelayTerm term;
    term.A = sp.A[i];
    term.h = h;
    term.steps = std::lround(h / dt);
    term.snapped = std::abs(static_cast<double>(term.steps) * dt - h) <= opt.snap_tolerance;
    ps.interpolated = ps.interpolated || !term.snapped;
    ps.terms.push_back(std::move(term));
  }
  return ps;
}

std::size_t step_count(double T, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw SolverError("dt must be positive and finite");
  if (!(T > 0.0) || !std::isfinite(T) || T < dt * (1.0 - 1e-12)) throw SolverError("horizon T must satisfy T >= dt");
  return static_cast<std::size_t>(std::ceil(T / dt - 1e-9));
}

Eigen::MatrixXd delayed_value(const MatrixSeries& X, std::size_t known, double dt, double s, long exact_index,
                              bool on_grid, bool left, const History& history) {
  if (on_grid) {
    if (exact_index < 0) return history(static_cast<double>(exact_index) * dt, left);
    if (exact_index == 0) return left ? history(0.0, true) : Eigen::MatrixXd(X[0]);
    return X[static_cast<std::size_t>(exact_index)];
  }
  if (s < 0.0) return history(s, left);
  if (s == 0.0) return left ? history(0.0, true) : Eigen::MatrixXd(X[0]);
  const double pos = s / dt;
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const double w = pos - static_cast<double>(lo);
  if (lo + 1 >= known || w == 0.0) return X[std::min(lo, known - 1)];
  return (1.0 - w) * X[lo] + w * X[lo + 1];
}

MatrixSeries march(const PreparedSpec& ps, const EvolutionOperators& ops, Eigen::Index cols, const Base& base,
                   const History& history, const Forcing& forcing) {
  const Eigen::Index n = ps.spec.n();
  const std::size_t N = ops.steps;
  const double dt = ops.dt;
  MatrixSeries X(n, cols, N + 1);
  MatrixSeries Fm(n, cols, N + 1);
  MatrixSeries Fp(n, cols, N + 1);

  auto forcing_at = [&](std::size_t m, bool left) {
    Eigen::MatrixXd f = forcing ? forcing(m, left) : Eigen::MatrixXd::Zero(n, cols);
    for (const DelayTerm& term : ps.terms) {
      const double s = static_cast<double>(m) * dt - term.h;
      const long idx = static_cast<long>(m) - term.steps;
      f.noalias() += term.A * delayed_value(X, m, dt, s, idx, term.snapped, left, history);
    }
    return f;
  };

  for (std::size_t step = 0; step <= N; ++step) {
    Fm[step] = forcing_at(step, true);
    Fp[step] = forcing_at(step, false);
    Eigen::MatrixXd x = base(step);
    double* out = x.data();
    for (std::size_t q = 0; q < step; ++q) {
      gemm_acc(ops.fall[q].data(), Fm[step - q].data(), out, n, cols);
      gemm_acc(ops.rise[q].data(), Fp[step - q - 1].data(), out, n, cols);
    }
    X[step] = x;
  }
  return X;
}

}  // namespace detail

EvolutionOperators phi_operators(const SystemSpec& s, double T, double dt, const SolverOptions& opt) {
  const detail::PreparedSpec ps = detail::prepare(s, dt, opt);
  const std::size_t N = detail::step_count(T, dt);
  const Eigen::MatrixXd& A0 = ps.spec.A[0];
  const Eigen::Index n = A0.rows();
  const double alpha = s.order.alpha;
  const int k = s.order.k;
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);

  EvolutionOperators ops;
  ops.dt = dt;
  ops.steps = N;
  ops.alpha = alpha;
  ops.k = k;
  ops.phi_j0.assign(static_cast<std::size_t>(k), MatrixSeries(n, n, N + 1));
  ops.phi_a = MatrixSeries(n, n, N + 1);
  ops.phi_a_integral = MatrixSeries(n, n, N + 1);
  ops.fall = MatrixSeries(n, n, N);
  ops.rise = MatrixSeries(n, n, N);

  const std::size_t closed = std::min(N, detail::kClosedFormPanels);
  std::vector<Eigen::MatrixXd> G(closed + 1, Eigen::MatrixXd::Zero(n, n));

  ops.phi_j0[0][0] = I;
  if (alpha == 1.0) {
    ops.phi_a[0] = I;
  } else if (alpha < 1.0) {
    ops.phi_a[0].setConstant(std::numeric_limits<double>::quiet_NaN());
  }

  std::vector<double> betas;
  for (std::size_t i = 1; i <= N; ++i) {
    const double t = ops.time(i);
    betas.clear();
    for (int j = 0; j < k; ++j) betas.push_back(j + 1.0);
    betas.push_back(alpha);
    betas.push_back(alpha + 1.0);
    if (i <= closed) betas.push_back(alpha + 2.0);
    const double ta = std::pow(t, alpha);
    const std::vector<Eigen::MatrixXd> E = ml_matrix_multi(alpha, betas, A0 * ta);
    for (int j = 0; j < k; ++j) ops.phi_j0[static_cast<std::size_t>(j)][i] = std::pow(t, j) * E[static_cast<std::size_t>(j)];
    ops.phi_a[i] = (ta / t) * E[static_cast<std::size_t>(k)];
    ops.phi_a_integral[i] = ta * E[static_cast<std::size_t>(k) + 1];
    if (i <= closed) G[i] = ta * t * E[static_cast<std::size_t>(k) + 2];
  }

  for (std::size_t q = 0; q < closed; ++q) {
    const Eigen::MatrixXd dG = (G[q + 1] - G[q]) / dt;
    ops.fall[q] = dG - ops.phi_a_integral[q];
    ops.rise[q] = Eigen::MatrixXd(ops.phi_a_integral[q + 1]) - dG;
  }
  const double beta_a[1] = {alpha};
  for (std::size_t q = closed; q < N; ++q) {
    Eigen::MatrixXd fall = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd rise = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t g = 0; g < detail::kGaussX.size(); ++g) {
      const double x = 0.5 * (detail::kGaussX[g] + 1.0);
      const double sq = (static_cast<double>(q) + x) * dt;
      const double sa = std::pow(sq, alpha);
      const Eigen::MatrixXd kernel = (0.5 * detail::kGaussW[g] * dt * sa / sq) * ml_matrix_multi(alpha, beta_a, A0 * sa)[0];
      fall += (1.0 - x) * kernel;
      rise += x * kernel;
    }
    ops.fall[q] = fall;
    ops.rise[q] = rise;
  }
  return ops;
}

EvolutionOperators psi_operators(const SystemSpec& s, double T, double dt, const SolverOptions& opt) {
  EvolutionOperators ops = phi_operators(s, T, dt, opt);
  const detail::PreparedSpec ps = detail::prepare(s, dt, opt);
  const Eigen::Index n = ps.spec.n();
  const detail::History zero = [n](double, bool) { return Eigen::MatrixXd::Zero(n, n); };
  for (int j = 0; j < ops.k; ++j) {
    const MatrixSeries& phi = ops.phi_j0[static_cast<std::size_t>(j)];
    ops.psi_j0.push_back(detail::march(
        ps, ops, n, [&](std::size_t i) { return Eigen::MatrixXd(phi[i]); }, zero, {}));
  }
  ops.psi_a_integral = detail::march(
      ps, ops, n, [&](std::size_t i) { return Eigen::MatrixXd(ops.phi_a_integral[i]); }, zero, {});
  ops.has_psi = true;
  return ops;
}

}  // namespace fracdelay
