#pragma once

#include "fracdelay/solver.hpp"

#include <functional>

namespace fracdelay::detail {

struct DelayTerm {
  Eigen::MatrixXd A;
  double h = 0.0;
  long steps = 0;       // round(h / dt)
  bool snapped = true;  // h lies on the grid
};

/// Spec ready for stepping: zero delays folded into A0, optional grouping applied.
struct PreparedSpec {
  SystemSpec spec;
  std::vector<DelayTerm> terms;  // positive delays only
  bool interpolated = false;
};

PreparedSpec prepare(const SystemSpec& s, double dt, const SolverOptions& opt);
std::size_t step_count(double T, double dt);

/// Value of the unknown for s <= 0; `left` asks for the left limit.
using History = std::function<Eigen::MatrixXd(double s, bool left)>;
/// Extra forcing at node m (left or right limit); may be empty.
using Forcing = std::function<Eigen::MatrixXd(std::size_t m, bool left)>;
using Base = std::function<Eigen::MatrixXd(std::size_t n)>;

/// Solves X(t) = base(t) + int_0^t Phi_a(t - tau) F(tau) dtau with
/// F(tau) = sum_i A_i X(tau - h_i) + E(tau), marching forward on the grid of `ops`.
MatrixSeries march(const PreparedSpec& ps, const EvolutionOperators& ops, Eigen::Index cols, const Base& base,
                   const History& history, const Forcing& forcing);

/// Value of a marched solution X at s (history for s <= 0).
Eigen::MatrixXd delayed_value(const MatrixSeries& X, std::size_t known, double dt, double s, long exact_index,
                              bool on_grid, bool left, const History& history);

}  // namespace fracdelay::detail
