#pragma once

#include "fracdelay/system_model.hpp"

#include <Eigen/Dense>

#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fracdelay {

/// Time stepping failed or was requested with an unusable grid.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A sequence of equally shaped matrices stored back to back.
class MatrixSeries {
 public:
  MatrixSeries() = default;
  MatrixSeries(Eigen::Index rows, Eigen::Index cols, std::size_t count)
      : rows_(rows), cols_(cols), count_(count), data_(static_cast<std::size_t>(rows * cols) * count, 0.0) {}

  std::size_t size() const { return count_; }
  Eigen::Index rows() const { return rows_; }
  Eigen::Index cols() const { return cols_; }

  Eigen::Map<Eigen::MatrixXd> operator[](std::size_t i) { return {slot(i), rows_, cols_}; }
  Eigen::Map<const Eigen::MatrixXd> operator[](std::size_t i) const { return {slot(i), rows_, cols_}; }

 private:
  double* slot(std::size_t i) { return data_.data() + static_cast<std::size_t>(rows_ * cols_) * i; }
  const double* slot(std::size_t i) const { return data_.data() + static_cast<std::size_t>(rows_ * cols_) * i; }

  Eigen::Index rows_ = 0;
  Eigen::Index cols_ = 0;
  std::size_t count_ = 0;
  std::vector<double> data_;
};

/// Tabulated solution operators on the grid t_i = i * dt, i = 0..N.
///
/// Phi_a(t) = t^(alpha-1) E_{alpha,alpha}(A0 t^alpha) is singular at 0 for alpha < 1,
/// so it only enters through the panel weights `fall`/`rise`. `phi_a[0]` holds its
/// limit when finite and NaN otherwise. Psi_a is stored integrated (`psi_a_integral`,
/// K(t) = int_0^t Psi_a), which is continuous and vanishes at 0.
struct EvolutionOperators {
  double dt = 0.0;
  std::size_t steps = 0;
  double alpha = 1.0;
  int k = 1;

  std::vector<MatrixSeries> phi_j0;  // k tables
  MatrixSeries phi_a;
  MatrixSeries phi_a_integral;       // int_0^t Phi_a = t^alpha E_{alpha,alpha+1}(A0 t^alpha)
  MatrixSeries fall;                 // panel q weight on the value at s = q dt
  MatrixSeries rise;                 // panel q weight on the value at s = (q+1) dt

  bool has_psi = false;
  std::vector<MatrixSeries> psi_j0;
  MatrixSeries psi_a_integral;

  double time(std::size_t i) const { return dt * static_cast<double>(i); }
};

struct SolverOptions {
  /// Estimate the discretisation error by re-solving on a doubled (or halved) grid.
  bool estimate_error = true;
  /// Merge repeated delays before stepping. Zero delays are always folded into A0.
  bool group_repeated_delays = true;
  /// Use every phi_j (not just phi_0) in the initial-function convolution.
  /// Off by default: only phi_0 is state history.
  bool literal_initial_sum = false;
  /// Delays within this distance of a grid multiple are snapped onto the grid.
  double snap_tolerance = 1e-9;
};

struct TrajectoryMeta {
  std::string method;
  double dt = 0.0;
  DerivativeKind deriv = DerivativeKind::Caputo;
  std::vector<Eigen::VectorXd> point_values;
  bool interpolated_delays = false;
  bool literal_initial_sum = false;
  /// Step-doubling estimate of the sup-norm error; 0 when not computed.
  double error_estimate = 0.0;
  /// Declared tolerance: error estimate plus a round-off floor.
  double tolerance = 0.0;
  std::optional<double> residual;
};

/// States on the grid -M dt, ..., 0, ..., N dt. Column `zero_index()` is t = 0.
struct Trajectory {
  std::vector<double> grid;
  Eigen::MatrixXd states;
  std::size_t history_steps = 0;
  TrajectoryMeta meta;

  std::size_t zero_index() const { return history_steps; }
  std::size_t forward_steps() const { return grid.size() - history_steps - 1; }
  Eigen::Index n() const { return states.rows(); }
  Eigen::VectorXd at(std::size_t i) const { return states.col(static_cast<Eigen::Index>(i)); }
  /// Forward part (t >= 0) as one column per node.
  Eigen::MatrixXd forward() const { return states.rightCols(static_cast<Eigen::Index>(forward_steps() + 1)); }
  double sup_norm() const { return states.size() ? states.cwiseAbs().maxCoeff() : 0.0; }
};

/// Phi tables and quadrature weights on [0, T].
EvolutionOperators phi_operators(const SystemSpec& s, double T, double dt,
                                 const SolverOptions& opt = {});
/// Phi part plus the Psi tables obtained from their Volterra equations.
EvolutionOperators psi_operators(const SystemSpec& s, double T, double dt,
                                 const SolverOptions& opt = {});

/// Explicit march of the Phi-kernel Volterra form. Requires dt <= smallest positive delay.
Trajectory solve_caputo(const SystemSpec& s, const InitialData& init, const ControlSignal& u, double T,
                        double dt, const SolverOptions& opt = {});
/// Same march with Phi_{alpha j0}(t) replaced by Phi_{alpha j0}(t) - t^j/j! I.
Trajectory solve_rl(const SystemSpec& s, const InitialData& init, const ControlSignal& u, double T,
                    double dt, const SolverOptions& opt = {});
/// Direct quadrature against the Psi tables; no state feedback. Uses the RL
/// correction on Psi_{alpha j0} for RL systems.
Trajectory solve_via_psi(const SystemSpec& s, const InitialData& init, const ControlSignal& u, double T,
                         double dt, const SolverOptions& opt = {});
/// Integer-order reference (alpha = 1) by exact exponential integration of the
/// piecewise-linear forcing on each step.
Trajectory solve_classical(const SystemSpec& s, const InitialData& init, const ControlSignal& u, double T,
                           double dt, const SolverOptions& opt = {});
/// Dispatches on the derivative kind of the system.
Trajectory solve(const SystemSpec& s, const InitialData& init, const ControlSignal& u, double T, double dt,
                 const SolverOptions& opt = {});

/// d = x_RL - x_Caputo computed on its own: d(t) = -sum_j t^j/j! x_j0 propagated
/// through the delayed terms, with zero history.
Trajectory rl_correction(const SystemSpec& s, const InitialData& init, double T, double dt,
                         const SolverOptions& opt = {});

/// Max-norm of D^alpha x - sum_i A_i x(t - h_i) - B u over the forward grid,
/// excluding a layer of width `layer` after t = 0 and after each positive delay
/// (negative selects 5 dt). Also stores the value in traj.meta.residual.
double verify_residual(const SystemSpec& s, Trajectory& traj, const ControlSignal& u, double layer = -1.0);

/// Sup-norm distance over the common forward grid.
double max_deviation(const Trajectory& a, const Trajectory& b);

/// CSV with header t,x1,...,xn and one row per grid node (17 significant digits).
void write_csv(std::ostream& os, const Trajectory& traj, bool include_history = true);

}  // namespace fracdelay
