#pragma once

#include "fracdelay/solver.hpp"
#include "fracdelay/system_model.hpp"

#include <Eigen/Dense>

#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace fracdelay {

// ---------------------------------------------------------------- positivity

enum class PositivityVerdict { NonnegativeForAllTime, NonnegativeFirstInterval, NotGuaranteed, ViolatedByWitness };
std::string to_string(PositivityVerdict v);

struct NamedCheck {
  std::string name;
  bool passed = false;
  bool skipped = false;
  std::string note;
};

/// Nonnegative data that drives a simulated state below zero.
struct Witness {
  std::string construction;
  InitialData init;
  ControlSignal input;
  double time = 0.0;
  Eigen::Index component = 0;
  double value = 0.0;
  Trajectory trajectory;
};

struct PositivityReport {
  PositivityVerdict verdict = PositivityVerdict::NotGuaranteed;
  std::vector<NamedCheck> checks;
  std::optional<Witness> witness;

  /// Looks up a check by name; throws std::out_of_range if absent.
  const NamedCheck& check(const std::string& name) const;
};

/// All off-diagonal entries >= 0 (exact comparison).
bool is_metzler(const Eigen::MatrixXd& A);
/// All entries >= -tol.
bool is_nonnegative(const Eigen::MatrixXd& A, double tol = 0.0);
/// A^n == 0 up to round-off relative to ||A||^n.
bool is_nilpotent(const Eigen::MatrixXd& A);

/// Checklist on the grouped spec; no simulation.
PositivityReport positivity_caputo(const SystemSpec& s);
/// Adds the sampled matrix condition E_{alpha,j+1}(A0 t^alpha) - I/j! >= 0 on 200
/// log-spaced points in [dt, 10 h]; skipped when every x_j0 is zero.
PositivityReport positivity_rl(const SystemSpec& s, const InitialData& init, double dt = 1e-3);

struct WitnessSearch {
  double tol = 1e-9;
  int steps_per_window = 200;
};

/// Tries unit-vector constructions aimed at each violated sign condition.
std::optional<Witness> find_positivity_witness(const SystemSpec& s, const WitnessSearch& opt = {});

/// Checklist plus falsification: a witness is attached when the checklist is
/// not satisfied, and a first-interval verdict becomes ViolatedByWitness when a
/// later sign change is simulated.
PositivityReport analyze_positivity(const SystemSpec& s, const InitialData& init, const WitnessSearch& opt = {});

struct MonitorReport {
  double min_value = 0.0;
  double min_time = 0.0;
  Eigen::Index min_component = 0;
  bool violated = false;
  double sup_norm = 0.0;
  bool bounded = true;
};

/// Minimum state component over t >= 0 and sup-norm against `bound`.
MonitorReport monitor_trajectory(const Trajectory& traj, double tol,
                                 double bound = std::numeric_limits<double>::infinity());

// ----------------------------------------------------------------- stability

enum class StabilityVerdict { GloballyStable, GloballyAsymptoticallyStable, Inconclusive, Alpha2Advisory };
enum class StabilityRoute { DirectMeasure, FractionalPower, CanonicalForm };
std::string to_string(StabilityVerdict v);
std::string to_string(StabilityRoute r);

/// A0 = T^{-1} (J_d + J_off) T with J_d diagonal and real.
struct CanonicalForm {
  Eigen::MatrixXd T;
  Eigen::MatrixXd J_d;
  Eigen::MatrixXd J_off;
  double condition = 1.0;
  bool ill_conditioned = false;
};

struct BetaOptimum {
  std::vector<double> beta;
  double value = 0.0;
};

struct StabilityReport {
  StabilityVerdict verdict = StabilityVerdict::Inconclusive;
  StabilityRoute route = StabilityRoute::CanonicalForm;
  /// Measure the route compares against (mu_2 of A0, of A0^{1/alpha}, or of J_d).
  double mu2 = 0.0;
  /// Right-hand side of the route's inequality.
  double threshold = 0.0;
  double stacked_norm = 0.0;
  std::vector<double> beta;
  std::optional<CanonicalForm> transform;
  /// The threshold |mu|^{1/alpha} alone overstates the admissible delay gain when
  /// |mu| > 1; a second, dimensionally consistent check must hold as well.
  bool guard_passed = false;
  std::string guard;
  std::string criterion;
  std::vector<std::string> notes;
};

/// (1/2) lambda_max(A + A^T).
double matrix_measure_l2(const Eigen::MatrixXd& A);
/// Largest singular value of [M_1/beta_1, ..., M_p/beta_p]. Requires beta > 0 and
/// sum beta^2 = 1 (to 1e-12).
double stacked_norm(const std::vector<Eigen::MatrixXd>& mats, const std::vector<double>& beta);
/// Coordinate descent on the unit sphere from uniform and norm-proportional starts.
BetaOptimum optimize_beta(const std::vector<Eigen::MatrixXd>& mats);
/// Real Schur based split; T = I for diagonal input.
CanonicalForm canonical_decomposition(const Eigen::MatrixXd& A0);
/// Principal A0^{1/alpha} when A0 is diagonalizable with spectrum off the closed
/// negative real axis; empty otherwise.
std::optional<Eigen::MatrixXd> fractional_power(const Eigen::MatrixXd& A0, double alpha);

/// Delay-independent sufficient criteria. Never reports instability.
StabilityReport stability_verdict(const SystemSpec& s);

struct AdvisoryReport {
  StabilityVerdict verdict = StabilityVerdict::Inconclusive;
  std::vector<int> required_zero;
  std::vector<int> nonzero_required;
  std::string reason;
  StabilityReport canonical;
};

/// Bounded-solution advisory for alpha >= 2.
AdvisoryReport alpha_ge2_advisory(const SystemSpec& s, const InitialData& init);

// ------------------------------------------------------------------- reports

std::string to_json(const PositivityReport& r, int indent = 2);
std::string to_json(const StabilityReport& r, int indent = 2);
std::string to_json(const AdvisoryReport& r, int indent = 2);
/// Combined document used by the command-line front end.
std::string analysis_json(const PositivityReport& pos, const StabilityReport& stab,
                          const std::optional<AdvisoryReport>& advisory, int indent = 2);

}  // namespace fracdelay
