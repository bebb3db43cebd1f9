#include "fracdelay/analysis.hpp"
#include "fracdelay/special_functions.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fracdelay {
namespace {

constexpr double kComputedTolerance = 1e-9;
constexpr int kRlSamples = 200;

NamedCheck make_check(std::string name, bool passed, std::string note = {}) {
  return {std::move(name), passed, false, std::move(note)};
}

Eigen::VectorXd unit(Eigen::Index n, Eigen::Index c) {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
  e[c] = 1.0;
  return e;
}

double smallest_positive_delay(const SystemSpec& g) {
  return g.delays.size() > 1 ? g.delays[1] : 0.0;
}

std::vector<NamedCheck> caputo_checks(const SystemSpec& g) {
  const Eigen::MatrixXd& A0 = g.A[0];
  bool ai = true;
  std::string ai_note;
  for (std::size_t i = 1; i < g.A.size(); ++i) {
    if (!is_nonnegative(g.A[i])) {
      ai = false;
      ai_note = "grouped matrix at delay " + std::to_string(g.delays[i]) + " has a negative entry";
      break;
    }
  }
  std::vector<NamedCheck> checks;
  checks.push_back(make_check("A0_metzler", is_metzler(A0), "applied to the sum of all zero-delay matrices"));
  checks.push_back(make_check("Ai_nonneg", ai, ai ? "applied to grouped sums per distinct delay" : ai_note));
  checks.push_back(make_check("B_nonneg", is_nonnegative(g.B)));
  checks.push_back(make_check("A0_nonneg", is_nonnegative(A0)));
  checks.push_back(make_check("A0_nilpotent", is_nilpotent(A0)));
  checks.push_back(make_check("alpha_le_1", g.order.alpha <= 1.0));
  return checks;
}

bool passed(const std::vector<NamedCheck>& checks, const std::string& name) {
  for (const auto& c : checks) {
    if (c.name == name) return c.passed;
  }
  return false;
}

bool base_conditions(const std::vector<NamedCheck>& c) {
  return passed(c, "A0_metzler") && passed(c, "Ai_nonneg") && passed(c, "B_nonneg");
}

bool strengthened_conditions(const std::vector<NamedCheck>& c) {
  return base_conditions(c) && (passed(c, "A0_nonneg") || passed(c, "A0_nilpotent") || passed(c, "alpha_le_1"));
}

std::optional<Witness> simulate_candidate(const SystemSpec& s, const InitialData& init, const ControlSignal& u,
                                          double T, double dt, const std::string& construction, double tol) {
  SolverOptions opt;
  opt.estimate_error = false;
  Trajectory tr;
  try {
    tr = solve(s, init, u, T, dt, opt);
  } catch (const SolverError&) {
    return std::nullopt;
  }
  const MonitorReport m = monitor_trajectory(tr, tol);
  if (!m.violated) return std::nullopt;
  return Witness{construction, init, u, m.min_time, m.min_component, m.min_value, std::move(tr)};
}

// phi_0 = e_c on [t0, t1] with short linear ramps, zero elsewhere.
FunctionDescriptor window(Eigen::Index n, Eigen::Index c, double t0, double t1, double ramp) {
  const Eigen::VectorXd e = unit(n, c);
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(n, 4);
  v.col(1) = e;
  v.col(2) = e;
  return FunctionDescriptor::samples({t0 - ramp, t0, t1, t1 + ramp}, v);
}

// phi_0 = e_c at t = 0, decaying linearly to zero over [-ramp, 0].
FunctionDescriptor spike_at_zero(Eigen::Index n, Eigen::Index c, double ramp) {
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(n, 2);
  v.col(1) = unit(n, c);
  return FunctionDescriptor::samples({-ramp, 0.0}, v);
}

InitialData with_phi0(const SystemSpec& s, FunctionDescriptor phi0) {
  InitialData d = zero_initial_data(s);
  d.phi[0] = std::move(phi0);
  return d;
}

}  // namespace

std::string to_string(PositivityVerdict v) {
  switch (v) {
    case PositivityVerdict::NonnegativeForAllTime:
      return "NonnegativeForAllTime";
    case PositivityVerdict::NonnegativeFirstInterval:
      return "NonnegativeFirstInterval";
    case PositivityVerdict::NotGuaranteed:
      return "NotGuaranteed";
    case PositivityVerdict::ViolatedByWitness:
      return "ViolatedByWitness";
  }
  return "unknown";
}

const NamedCheck& PositivityReport::check(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return c;
  }
  throw std::out_of_range("no positivity check named " + name);
}

bool is_metzler(const Eigen::MatrixXd& A) {
  if (A.rows() != A.cols()) throw std::invalid_argument("is_metzler: matrix must be square");
  for (Eigen::Index j = 0; j < A.cols(); ++j) {
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
      if (i != j && A(i, j) < 0.0) return false;
    }
  }
  return true;
}

bool is_nonnegative(const Eigen::MatrixXd& A, double tol) { return A.size() == 0 || A.minCoeff() >= -tol; }

bool is_nilpotent(const Eigen::MatrixXd& A) {
  const Eigen::Index n = A.rows();
  const double norm = A.cwiseAbs().colwise().sum().maxCoeff();
  if (norm == 0.0) return true;
  Eigen::MatrixXd P = A / norm;
  for (Eigen::Index i = 1; i < n; ++i) P = P * (A / norm);
  return P.cwiseAbs().maxCoeff() <= 1e-12 * static_cast<double>(n);
}

PositivityReport positivity_caputo(const SystemSpec& s) {
  s.validate();
  const SystemSpec g = grouped_spec(s);
  PositivityReport r;
  r.checks = caputo_checks(g);
  if (strengthened_conditions(r.checks)) {
    r.verdict = PositivityVerdict::NonnegativeForAllTime;
  } else if (base_conditions(r.checks)) {
    r.verdict = PositivityVerdict::NonnegativeFirstInterval;
  } else {
    r.verdict = PositivityVerdict::NotGuaranteed;
  }
  return r;
}

PositivityReport positivity_rl(const SystemSpec& s, const InitialData& init, double dt) {
  s.validate();
  if (!(dt > 0.0)) throw std::invalid_argument("positivity_rl: dt must be positive");
  const SystemSpec g = grouped_spec(s);
  PositivityReport r;
  r.checks = caputo_checks(g);

  const bool point_zero = init.point_values_zero();
  r.checks.push_back(make_check("x_j0_zero", point_zero));
  NamedCheck extra{"rl_extra_condition", true, false, {}};
  if (point_zero) {
    extra.skipped = true;
    extra.note = "skipped: every x_j0 is zero";
  } else {
    const double h = g.max_delay() > 0.0 ? g.max_delay() : 1.0;
    const double t_hi = std::max(10.0 * h, 10.0 * dt);
    const Eigen::Index n = g.n();
    double worst = 0.0;
    double worst_t = dt;
    int worst_j = 0;
    std::vector<double> betas;
    for (int j = 0; j < g.order.k; ++j) betas.push_back(j + 1.0);
    for (int i = 0; i < kRlSamples; ++i) {
      const double t = dt * std::pow(t_hi / dt, static_cast<double>(i) / (kRlSamples - 1));
      const auto E = ml_matrix_multi(g.order.alpha, betas, g.A[0] * std::pow(t, g.order.alpha));
      double fact = 1.0;
      for (int j = 0; j < g.order.k; ++j) {
        if (j > 0) fact *= j;
        const double m = (E[static_cast<std::size_t>(j)] - Eigen::MatrixXd::Identity(n, n) / fact).minCoeff();
        if (m < worst) {
          worst = m;
          worst_t = t;
          worst_j = j;
        }
      }
    }
    extra.passed = worst >= -kComputedTolerance;
    extra.note = "sampled on " + std::to_string(kRlSamples) + " log-spaced points in [" + std::to_string(dt) + ", " +
                 std::to_string(t_hi) + "]";
    if (!extra.passed) {
      extra.note += "; min entry " + std::to_string(worst) + " for j=" + std::to_string(worst_j) +
                    " at t=" + std::to_string(worst_t);
    }
  }
  r.checks.push_back(extra);

  if (!base_conditions(r.checks) || !extra.passed) {
    r.verdict = PositivityVerdict::NotGuaranteed;
  } else if (strengthened_conditions(r.checks)) {
    r.verdict = PositivityVerdict::NonnegativeForAllTime;
  } else {
    r.verdict = PositivityVerdict::NonnegativeFirstInterval;
  }
  return r;
}

MonitorReport monitor_trajectory(const Trajectory& traj, double tol, double bound) {
  MonitorReport m;
  if (traj.states.size() == 0) return m;
  Eigen::Index row = 0;
  Eigen::Index col = 0;
  m.min_value = traj.states.minCoeff(&row, &col);
  m.min_component = row;
  m.min_time = traj.grid[static_cast<std::size_t>(col)];
  m.violated = m.min_value < -tol;
  m.sup_norm = traj.sup_norm();
  m.bounded = m.sup_norm <= bound;
  return m;
}

std::optional<Witness> find_positivity_witness(const SystemSpec& s, const WitnessSearch& opt) {
  s.validate();
  const SystemSpec g = grouped_spec(s);
  const Eigen::Index n = g.n();
  const double h1 = smallest_positive_delay(g);
  const double short_window = h1 > 0.0 ? 0.5 * h1 : 1.0;
  const int steps = std::max(opt.steps_per_window, 10);
  const ControlSignal no_input = zero_input(g);

  // A positive-delay matrix with a negative entry: excite its column through the
  // history window that this delay alone reads during the first instants.
  for (std::size_t i = 1; i < g.A.size(); ++i) {
    const double h = g.delays[i];
    double gap = h;
    for (std::size_t j = 1; j < g.delays.size(); ++j) {
      if (j != i) gap = std::min(gap, std::abs(g.delays[j] - h));
    }
    const double w = 0.25 * gap;
    for (Eigen::Index c = 0; c < n; ++c) {
      for (Eigen::Index r = 0; r < n; ++r) {
        if (!(g.A[i](r, c) < 0.0)) continue;
        const InitialData init = with_phi0(g, window(n, c, -h, -h + w, 0.25 * w));
        auto found = simulate_candidate(g, init, no_input, w, w / steps,
                                        "unit history pulse in component " + std::to_string(c + 1) +
                                            " read through delay " + std::to_string(h),
                                        opt.tol);
        if (found) return found;
        break;
      }
    }
  }

  // A negative input gain: constant unit input on that column.
  for (Eigen::Index c = 0; c < g.m(); ++c) {
    if (!(g.B.col(c).minCoeff() < 0.0)) continue;
    Eigen::VectorXd e = Eigen::VectorXd::Zero(g.m());
    e[c] = 1.0;
    const ControlSignal u{FunctionDescriptor::constant(e), 1.0};
    auto found = simulate_candidate(g, zero_initial_data(g), u, short_window, short_window / steps,
                                    "unit constant input on channel " + std::to_string(c + 1), opt.tol);
    if (found) return found;
  }

  // Point data e_c at t = 0, with a history that no delay reads early on. Catches a
  // non-Metzler A0 and, for RL dynamics, a failing point-data condition.
  for (Eigen::Index c = 0; c < n; ++c) {
    const bool non_metzler_col = [&] {
      for (Eigen::Index r = 0; r < n; ++r) {
        if (r != c && g.A[0](r, c) < 0.0) return true;
      }
      return false;
    }();
    if (!non_metzler_col && g.deriv == DerivativeKind::Caputo) continue;
    const FunctionDescriptor phi0 =
        h1 > 0.0 ? spike_at_zero(n, c, 0.5 * h1) : FunctionDescriptor::constant(unit(n, c));
    auto found = simulate_candidate(g, with_phi0(g, phi0), no_input, short_window, short_window / steps,
                                    "unit point value in component " + std::to_string(c + 1), opt.tol);
    if (found) return found;
  }
  return std::nullopt;
}

PositivityReport analyze_positivity(const SystemSpec& s, const InitialData& init, const WitnessSearch& opt) {
  PositivityReport r = s.deriv == DerivativeKind::Caputo ? positivity_caputo(s) : positivity_rl(s, init);
  if (r.verdict == PositivityVerdict::NotGuaranteed) {
    r.witness = find_positivity_witness(s, opt);
  } else if (r.verdict == PositivityVerdict::NonnegativeFirstInterval) {
    // Look for a later sign change from constant unit histories over three maximal delays.
    const SystemSpec g = grouped_spec(s);
    const double h1 = smallest_positive_delay(g);
    const double T = g.max_delay() > 0.0 ? 3.0 * g.max_delay() : 3.0;
    const double dt = std::min(T / 300.0, h1 > 0.0 ? h1 : T);
    for (Eigen::Index c = 0; c < g.n() && !r.witness; ++c) {
      r.witness = simulate_candidate(g, with_phi0(g, FunctionDescriptor::constant(unit(g.n(), c))), zero_input(g), T,
                                     dt, "constant unit history in component " + std::to_string(c + 1), opt.tol);
    }
    if (r.witness) r.verdict = PositivityVerdict::ViolatedByWitness;
  }
  return r;
}

}  // namespace fracdelay
