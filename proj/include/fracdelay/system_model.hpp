#pragma once

#include "fracdelay/fractional_calculus.hpp"

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fracdelay {

/// Schema or invariant violation in a system description.
class SpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class DerivativeKind { Caputo, RiemannLiouville };

std::string to_string(DerivativeKind kind);

/// D^alpha x(t) = sum_i A_i x(t - h_i) + B u(t), with h_0 = 0 <= h_1 <= ... <= h_p.
struct SystemSpec {
  FracOrder order;
  DerivativeKind deriv = DerivativeKind::Caputo;
  std::vector<double> delays;
  std::vector<Eigen::MatrixXd> A;
  Eigen::MatrixXd B;

  Eigen::Index n() const { return A.empty() ? 0 : A.front().rows(); }
  Eigen::Index m() const { return B.cols(); }
  std::size_t p() const { return delays.empty() ? 0 : delays.size() - 1; }
  double max_delay() const { return delays.empty() ? 0.0 : delays.back(); }
  /// True when 0 = h_0 < h_1 < ... < h_p.
  bool strictly_ordered() const;
  void validate() const;

  friend bool operator==(const SystemSpec&, const SystemSpec&);
};

/// Distinct delays with their multiplicities and summed matrices.
struct GroupedDelays {
  std::vector<double> distinct;
  std::vector<int> multiplicity;
  std::vector<Eigen::MatrixXd> matrices;
};

/// Delays within this relative distance (of the largest delay) count as equal.
inline constexpr double kDelayMergeTolerance = 1e-12;

GroupedDelays group_delays(const SystemSpec& s);

/// Equivalent spec whose delays are pairwise distinct.
SystemSpec grouped_spec(const SystemSpec& s);

/// Built-in function catalog for initial functions and inputs.
class FunctionDescriptor {
 public:
  enum class Kind { Zero, Constant, Polynomial, Samples, Step, Sinusoid };

  static FunctionDescriptor zero(Eigen::Index dim);
  static FunctionDescriptor constant(const Eigen::VectorXd& value);
  /// sum_i coeffs[i] * t^i
  static FunctionDescriptor polynomial(const std::vector<Eigen::VectorXd>& coeffs);
  /// Piecewise-linear through (t_i, values.col(i)); constant beyond the ends.
  static FunctionDescriptor samples(const std::vector<double>& t, const Eigen::MatrixXd& values);
  /// 0 for t < time, value for t >= time.
  static FunctionDescriptor step(double time, const Eigen::VectorXd& value);
  /// offset + amplitude * sin(omega t + phase)
  static FunctionDescriptor sinusoid(const Eigen::VectorXd& amplitude, double omega, double phase,
                                     const Eigen::VectorXd& offset);

  Kind kind() const { return kind_; }
  Eigen::Index dim() const { return dim_; }

  /// Right-continuous value.
  Eigen::VectorXd operator()(double t) const;
  /// Left limit; differs from operator() only at a step.
  Eigen::VectorXd left(double t) const;
  /// Discontinuity times in [a, b].
  std::vector<double> jumps(double a, double b) const;
  bool identically_zero() const;
  /// Sup-norm over [a, b] (exact for the piecewise catalog, sampled for sinusoids).
  double sup_norm(double a, double b) const;
  /// Minimum component over [a, b].
  double min_value(double a, double b) const;

  friend bool operator==(const FunctionDescriptor&, const FunctionDescriptor&);

 private:
  Kind kind_ = Kind::Zero;
  Eigen::Index dim_ = 0;
  Eigen::VectorXd value_;
  Eigen::VectorXd offset_;
  std::vector<Eigen::VectorXd> coeffs_;
  std::vector<double> t_;
  Eigen::MatrixXd samples_;
  double time_ = 0.0;
  double omega_ = 0.0;
  double phase_ = 0.0;

  friend struct DescriptorCodec;
};

/// The k initial functions on [-h, 0]; x_{j0} = phi_j(0).
struct InitialData {
  std::vector<FunctionDescriptor> phi;

  std::size_t k() const { return phi.size(); }
  Eigen::VectorXd point_value(std::size_t j) const { return phi.at(j)(0.0); }
  std::vector<Eigen::VectorXd> point_values() const;
  bool point_values_zero() const;

  friend bool operator==(const InitialData&, const InitialData&) = default;
};

/// Bounded piecewise-continuous input u on [0, inf).
struct ControlSignal {
  FunctionDescriptor u;
  double bound = 0.0;

  Eigen::VectorXd operator()(double t) const { return u(t); }
  Eigen::VectorXd left(double t) const { return u.left(t); }

  friend bool operator==(const ControlSignal&, const ControlSignal&) = default;
};

struct ProblemDocument {
  SystemSpec spec;
  InitialData init;
  ControlSignal input;
  std::optional<double> horizon;
  std::optional<double> dt;

  friend bool operator==(const ProblemDocument&, const ProblemDocument&) = default;
};

/// Parses and validates a JSON problem document.
ProblemDocument parse_spec(const std::string& text);
ProblemDocument load_spec_file(const std::string& path);
std::string serialize(const ProblemDocument& doc);

/// Zero initial data / zero input of the right shapes.
InitialData zero_initial_data(const SystemSpec& s);
ControlSignal zero_input(const SystemSpec& s);

/// Checks k, dimensions and the declared input bound against the system.
void validate_problem(const SystemSpec& s, const InitialData& init, const ControlSignal& u);

}  // namespace fracdelay
