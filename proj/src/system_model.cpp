#include "fracdelay/system_model.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace fracdelay {

using nlohmann::json;

namespace {

bool same_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

bool same_vector(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.size() == b.size() && (a.array() == b.array()).all();
}

double number(const json& j, const std::string& ctx) {
  if (!j.is_number()) throw SpecError(ctx + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw SpecError(ctx + ": must be finite");
  return v;
}

Eigen::VectorXd vector_of(const json& j, Eigen::Index dim, const std::string& ctx) {
  if (!j.is_array()) throw SpecError(ctx + ": expected an array of " + std::to_string(dim) + " numbers");
  if (dim >= 0 && static_cast<Eigen::Index>(j.size()) != dim) {
    throw SpecError(ctx + ": expected " + std::to_string(dim) + " entries, got " + std::to_string(j.size()));
  }
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = number(j[i], ctx + "[" + std::to_string(i) + "]");
  return v;
}

Eigen::MatrixXd matrix_of(const json& j, Eigen::Index rows, Eigen::Index cols, const std::string& ctx) {
  if (!j.is_array() || j.empty()) throw SpecError(ctx + ": expected a non-empty array of rows");
  if (rows >= 0 && static_cast<Eigen::Index>(j.size()) != rows) {
    throw SpecError(ctx + ": expected " + std::to_string(rows) + " rows, got " + std::to_string(j.size()));
  }
  const Eigen::Index r = static_cast<Eigen::Index>(j.size());
  if (!j[0].is_array()) throw SpecError(ctx + "[0]: expected a row array");
  const Eigen::Index c = cols >= 0 ? cols : static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    m.row(i) = vector_of(j[static_cast<std::size_t>(i)], c, ctx + "[" + std::to_string(i) + "]").transpose();
  }
  return m;
}

void check_keys(const json& j, const std::set<std::string>& required, const std::set<std::string>& optional,
                const std::string& ctx) {
  if (!j.is_object()) throw SpecError(ctx + ": expected an object");
  for (const auto& key : required) {
    if (!j.contains(key)) throw SpecError(ctx + ": missing field '" + key + "'");
  }
  for (const auto& item : j.items()) {
    if (!required.count(item.key()) && !optional.count(item.key())) {
      throw SpecError(ctx + ": unexpected field '" + item.key() + "'");
    }
  }
}

json vector_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(vector_json(m.row(i).transpose()));
  return a;
}

}  // namespace

// Reads and writes the JSON form of FunctionDescriptor.
struct DescriptorCodec {
  static FunctionDescriptor decode(const json& j, Eigen::Index dim, bool for_input, const std::string& ctx) {
    if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) {
      throw SpecError(ctx + ": function descriptor needs a string field 'type'");
    }
    const std::string type = j["type"].get<std::string>();
    if (type == "zero") {
      check_keys(j, {"type"}, {}, ctx);
      return FunctionDescriptor::zero(dim);
    }
    if (type == "constant") {
      check_keys(j, {"type", "value"}, {}, ctx);
      return FunctionDescriptor::constant(vector_of(j["value"], dim, ctx + ".value"));
    }
    if (type == "polynomial" && !for_input) {
      check_keys(j, {"type", "coeffs"}, {}, ctx);
      if (!j["coeffs"].is_array() || j["coeffs"].empty()) throw SpecError(ctx + ".coeffs: expected a non-empty array");
      std::vector<Eigen::VectorXd> c;
      for (std::size_t i = 0; i < j["coeffs"].size(); ++i) {
        c.push_back(vector_of(j["coeffs"][i], dim, ctx + ".coeffs[" + std::to_string(i) + "]"));
      }
      return FunctionDescriptor::polynomial(c);
    }
    if (type == "samples") {
      check_keys(j, {"type", "t", "values"}, {}, ctx);
      const Eigen::VectorXd t = vector_of(j["t"], -1, ctx + ".t");
      if (t.size() == 0) throw SpecError(ctx + ".t: needs at least one sample");
      const Eigen::MatrixXd v = matrix_of(j["values"], t.size(), dim, ctx + ".values");
      return FunctionDescriptor::samples(std::vector<double>(t.data(), t.data() + t.size()), v.transpose());
    }
    if (type == "step" && for_input) {
      check_keys(j, {"type", "time", "value"}, {}, ctx);
      return FunctionDescriptor::step(number(j["time"], ctx + ".time"), vector_of(j["value"], dim, ctx + ".value"));
    }
    if (type == "sinusoid" && for_input) {
      check_keys(j, {"type", "amplitude", "omega"}, {"phase", "offset"}, ctx);
      const Eigen::VectorXd offset =
          j.contains("offset") ? vector_of(j["offset"], dim, ctx + ".offset") : Eigen::VectorXd::Zero(dim);
      const double phase = j.contains("phase") ? number(j["phase"], ctx + ".phase") : 0.0;
      return FunctionDescriptor::sinusoid(vector_of(j["amplitude"], dim, ctx + ".amplitude"),
                                          number(j["omega"], ctx + ".omega"), phase, offset);
    }
    throw SpecError(ctx + ": unsupported function type '" + type + "' for " +
                    (for_input ? "an input" : "an initial function"));
  }

  static json encode(const FunctionDescriptor& f) {
    using K = FunctionDescriptor::Kind;
    switch (f.kind_) {
      case K::Zero:
        return {{"type", "zero"}};
      case K::Constant:
        return {{"type", "constant"}, {"value", vector_json(f.value_)}};
      case K::Polynomial: {
        json c = json::array();
        for (const auto& v : f.coeffs_) c.push_back(vector_json(v));
        return {{"type", "polynomial"}, {"coeffs", c}};
      }
      case K::Samples: {
        json t = json::array();
        for (double x : f.t_) t.push_back(x);
        return {{"type", "samples"}, {"t", t}, {"values", matrix_json(f.samples_.transpose())}};
      }
      case K::Step:
        return {{"type", "step"}, {"time", f.time_}, {"value", vector_json(f.value_)}};
      case K::Sinusoid:
        return {{"type", "sinusoid"},
                {"amplitude", vector_json(f.value_)},
                {"omega", f.omega_},
                {"phase", f.phase_},
                {"offset", vector_json(f.offset_)}};
    }
    return {};
  }
};

std::string to_string(DerivativeKind kind) {
  return kind == DerivativeKind::Caputo ? "caputo" : "rl";
}

bool SystemSpec::strictly_ordered() const {
  for (std::size_t i = 1; i < delays.size(); ++i) {
    if (!(delays[i] > delays[i - 1])) return false;
  }
  return true;
}

void SystemSpec::validate() const {
  try {
    order.validate();
  } catch (const std::invalid_argument& e) {
    throw SpecError(std::string("alpha: ") + e.what());
  }
  if (delays.empty()) throw SpecError("delays: at least h_0 = 0 is required");
  if (delays.front() != 0.0) throw SpecError("delays: h_0 must be exactly 0");
  for (std::size_t i = 0; i < delays.size(); ++i) {
    if (!std::isfinite(delays[i])) throw SpecError("delays: must be finite");
    if (i > 0 && delays[i] < delays[i - 1]) throw SpecError("delays: must be nondecreasing");
  }
  if (A.size() != delays.size()) {
    throw SpecError("A: expected " + std::to_string(delays.size()) + " matrices (one per delay), got " +
                    std::to_string(A.size()));
  }
  const Eigen::Index nn = A.front().rows();
  if (nn < 1) throw SpecError("A[0]: empty matrix");
  for (std::size_t i = 0; i < A.size(); ++i) {
    if (A[i].rows() != nn || A[i].cols() != nn) {
      throw SpecError("A[" + std::to_string(i) + "]: expected " + std::to_string(nn) + "x" + std::to_string(nn));
    }
    if (!A[i].allFinite()) throw SpecError("A[" + std::to_string(i) + "]: entries must be finite");
  }
  if (B.rows() != nn) throw SpecError("B: expected " + std::to_string(nn) + " rows");
  if (B.cols() < 1) throw SpecError("B: needs at least one column");
  if (!B.allFinite()) throw SpecError("B: entries must be finite");
}

bool operator==(const SystemSpec& a, const SystemSpec& b) {
  if (!(a.order == b.order) || a.deriv != b.deriv || a.delays != b.delays || a.A.size() != b.A.size()) return false;
  for (std::size_t i = 0; i < a.A.size(); ++i) {
    if (!same_matrix(a.A[i], b.A[i])) return false;
  }
  return same_matrix(a.B, b.B);
}

GroupedDelays group_delays(const SystemSpec& s) {
  GroupedDelays g;
  const double tol = kDelayMergeTolerance * s.max_delay();
  for (std::size_t i = 0; i < s.delays.size(); ++i) {
    if (!g.distinct.empty() && std::abs(s.delays[i] - g.distinct.back()) <= tol) {
      g.multiplicity.back() += 1;
      g.matrices.back() += s.A[i];
    } else {
      g.distinct.push_back(s.delays[i]);
      g.multiplicity.push_back(1);
      g.matrices.push_back(s.A[i]);
    }
  }
  return g;
}

SystemSpec grouped_spec(const SystemSpec& s) {
  const GroupedDelays g = group_delays(s);
  SystemSpec out = s;
  out.delays = g.distinct;
  out.A = g.matrices;
  return out;
}

FunctionDescriptor FunctionDescriptor::zero(Eigen::Index dim) {
  FunctionDescriptor f;
  f.kind_ = Kind::Zero;
  f.dim_ = dim;
  return f;
}

FunctionDescriptor FunctionDescriptor::constant(const Eigen::VectorXd& value) {
  FunctionDescriptor f;
  f.kind_ = Kind::Constant;
  f.dim_ = value.size();
  f.value_ = value;
  return f;
}

FunctionDescriptor FunctionDescriptor::polynomial(const std::vector<Eigen::VectorXd>& coeffs) {
  if (coeffs.empty()) throw SpecError("polynomial: needs at least one coefficient vector");
  FunctionDescriptor f;
  f.kind_ = Kind::Polynomial;
  f.dim_ = coeffs.front().size();
  for (const auto& c : coeffs) {
    if (c.size() != f.dim_) throw SpecError("polynomial: coefficient dimension mismatch");
  }
  f.coeffs_ = coeffs;
  return f;
}

FunctionDescriptor FunctionDescriptor::samples(const std::vector<double>& t, const Eigen::MatrixXd& values) {
  if (t.empty() || static_cast<Eigen::Index>(t.size()) != values.cols()) {
    throw SpecError("samples: need matching, non-empty time and value arrays");
  }
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (!(t[i] > t[i - 1])) throw SpecError("samples: times must be strictly increasing");
  }
  FunctionDescriptor f;
  f.kind_ = Kind::Samples;
  f.dim_ = values.rows();
  f.t_ = t;
  f.samples_ = values;
  return f;
}

FunctionDescriptor FunctionDescriptor::step(double time, const Eigen::VectorXd& value) {
  FunctionDescriptor f;
  f.kind_ = Kind::Step;
  f.dim_ = value.size();
  f.time_ = time;
  f.value_ = value;
  return f;
}

FunctionDescriptor FunctionDescriptor::sinusoid(const Eigen::VectorXd& amplitude, double omega, double phase,
                                                const Eigen::VectorXd& offset) {
  if (offset.size() != amplitude.size()) throw SpecError("sinusoid: offset and amplitude dimensions differ");
  FunctionDescriptor f;
  f.kind_ = Kind::Sinusoid;
  f.dim_ = amplitude.size();
  f.value_ = amplitude;
  f.omega_ = omega;
  f.phase_ = phase;
  f.offset_ = offset;
  return f;
}

Eigen::VectorXd FunctionDescriptor::operator()(double t) const {
  switch (kind_) {
    case Kind::Zero:
      return Eigen::VectorXd::Zero(dim_);
    case Kind::Constant:
      return value_;
    case Kind::Polynomial: {
      Eigen::VectorXd acc = coeffs_.back();
      for (std::size_t i = coeffs_.size() - 1; i-- > 0;) acc = acc * t + coeffs_[i];
      return acc;
    }
    case Kind::Samples: {
      if (t <= t_.front()) return samples_.col(0);
      if (t >= t_.back()) return samples_.col(samples_.cols() - 1);
      const auto it = std::upper_bound(t_.begin(), t_.end(), t);
      const std::size_t hi = static_cast<std::size_t>(it - t_.begin());
      const std::size_t lo = hi - 1;
      const double w = (t - t_[lo]) / (t_[hi] - t_[lo]);
      return (1.0 - w) * samples_.col(static_cast<Eigen::Index>(lo)) + w * samples_.col(static_cast<Eigen::Index>(hi));
    }
    case Kind::Step:
      return t >= time_ ? value_ : Eigen::VectorXd::Zero(dim_);
    case Kind::Sinusoid:
      return offset_ + value_ * std::sin(omega_ * t + phase_);
  }
  return {};
}

Eigen::VectorXd FunctionDescriptor::left(double t) const {
  if (kind_ == Kind::Step && t == time_) return Eigen::VectorXd::Zero(dim_);
  return (*this)(t);
}

std::vector<double> FunctionDescriptor::jumps(double a, double b) const {
  if (kind_ == Kind::Step && time_ >= a && time_ <= b && !(value_.array() == 0.0).all()) return {time_};
  return {};
}

bool FunctionDescriptor::identically_zero() const {
  switch (kind_) {
    case Kind::Zero:
      return true;
    case Kind::Constant:
    case Kind::Step:
      return (value_.array() == 0.0).all();
    case Kind::Polynomial:
      return std::all_of(coeffs_.begin(), coeffs_.end(), [](const Eigen::VectorXd& c) { return (c.array() == 0.0).all(); });
    case Kind::Samples:
      return (samples_.array() == 0.0).all();
    case Kind::Sinusoid:
      return (offset_.array() == 0.0).all() && ((value_.array() == 0.0).all() || (omega_ == 0.0 && std::sin(phase_) == 0.0));
  }
  return false;
}

double FunctionDescriptor::sup_norm(double a, double b) const {
  if (dim_ == 0) return 0.0;
  switch (kind_) {
    case Kind::Zero:
      return 0.0;
    case Kind::Constant:
      return value_.cwiseAbs().maxCoeff();
    case Kind::Step:
      return b >= time_ ? value_.cwiseAbs().maxCoeff() : 0.0;
    case Kind::Sinusoid:
      return (offset_.cwiseAbs() + value_.cwiseAbs()).maxCoeff();
    case Kind::Samples: {
      double s = std::max((*this)(a).cwiseAbs().maxCoeff(), (*this)(b).cwiseAbs().maxCoeff());
      for (std::size_t i = 0; i < t_.size(); ++i) {
        if (t_[i] >= a && t_[i] <= b) s = std::max(s, samples_.col(static_cast<Eigen::Index>(i)).cwiseAbs().maxCoeff());
      }
      return s;
    }
    case Kind::Polynomial: {
      double s = 0.0;
      constexpr int kProbe = 2000;
      for (int i = 0; i <= kProbe; ++i) s = std::max(s, (*this)(a + (b - a) * i / kProbe).cwiseAbs().maxCoeff());
      return s;
    }
  }
  return 0.0;
}

double FunctionDescriptor::min_value(double a, double b) const {
  if (dim_ == 0) return 0.0;
  switch (kind_) {
    case Kind::Zero:
      return 0.0;
    case Kind::Constant:
      return value_.minCoeff();
    case Kind::Step:
      return b >= time_ ? (a < time_ ? std::min(0.0, value_.minCoeff()) : value_.minCoeff()) : 0.0;
    case Kind::Sinusoid:
      return (offset_ - value_.cwiseAbs()).minCoeff();
    case Kind::Samples: {
      double s = std::min((*this)(a).minCoeff(), (*this)(b).minCoeff());
      for (std::size_t i = 0; i < t_.size(); ++i) {
        if (t_[i] >= a && t_[i] <= b) s = std::min(s, samples_.col(static_cast<Eigen::Index>(i)).minCoeff());
      }
      return s;
    }
    case Kind::Polynomial: {
      double s = (*this)(a).minCoeff();
      constexpr int kProbe = 2000;
      for (int i = 1; i <= kProbe; ++i) s = std::min(s, (*this)(a + (b - a) * i / kProbe).minCoeff());
      return s;
    }
  }
  return 0.0;
}

bool operator==(const FunctionDescriptor& a, const FunctionDescriptor& b) {
  if (a.kind_ != b.kind_ || a.dim_ != b.dim_) return false;
  if (a.coeffs_.size() != b.coeffs_.size()) return false;
  for (std::size_t i = 0; i < a.coeffs_.size(); ++i) {
    if (!same_vector(a.coeffs_[i], b.coeffs_[i])) return false;
  }
  return same_vector(a.value_, b.value_) && same_vector(a.offset_, b.offset_) && a.t_ == b.t_ &&
         same_matrix(a.samples_, b.samples_) && a.time_ == b.time_ && a.omega_ == b.omega_ && a.phase_ == b.phase_;
}

std::vector<Eigen::VectorXd> InitialData::point_values() const {
  std::vector<Eigen::VectorXd> out;
  for (std::size_t j = 0; j < phi.size(); ++j) out.push_back(point_value(j));
  return out;
}

bool InitialData::point_values_zero() const {
  for (std::size_t j = 0; j < phi.size(); ++j) {
    if (!(point_value(j).array() == 0.0).all()) return false;
  }
  return true;
}

InitialData zero_initial_data(const SystemSpec& s) {
  InitialData d;
  d.phi.assign(static_cast<std::size_t>(s.order.k), FunctionDescriptor::zero(s.n()));
  return d;
}

ControlSignal zero_input(const SystemSpec& s) { return {FunctionDescriptor::zero(s.m()), 0.0}; }

void validate_problem(const SystemSpec& s, const InitialData& init, const ControlSignal& u) {
  s.validate();
  if (init.phi.size() != static_cast<std::size_t>(s.order.k)) {
    throw SpecError("phi: expected k=" + std::to_string(s.order.k) + " initial functions, got " +
                    std::to_string(init.phi.size()));
  }
  for (std::size_t j = 0; j < init.phi.size(); ++j) {
    if (init.phi[j].dim() != s.n()) throw SpecError("phi[" + std::to_string(j) + "]: dimension must equal n");
  }
  if (u.u.dim() != s.m()) throw SpecError("u: dimension must equal the number of columns of B");
  if (!(u.bound >= 0.0)) throw SpecError("u.bound: must be nonnegative");
}

ProblemDocument parse_spec(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SpecError(std::string("malformed JSON: ") + e.what());
  }
  check_keys(j, {"alpha", "deriv", "delays", "A", "B", "phi"}, {"u", "u_bound", "horizon", "dt"}, "spec");

  ProblemDocument doc;
  SystemSpec& s = doc.spec;
  const double alpha = number(j["alpha"], "alpha");
  if (!(alpha > 0.0)) throw SpecError("alpha: must be positive");
  s.order = FracOrder::from_alpha(alpha);

  if (!j["deriv"].is_string()) throw SpecError("deriv: expected \"caputo\" or \"rl\"");
  const std::string deriv = j["deriv"].get<std::string>();
  if (deriv == "caputo") {
    s.deriv = DerivativeKind::Caputo;
  } else if (deriv == "rl") {
    s.deriv = DerivativeKind::RiemannLiouville;
  } else {
    throw SpecError("deriv: expected \"caputo\" or \"rl\", got \"" + deriv + "\"");
  }

  const Eigen::VectorXd h = vector_of(j["delays"], -1, "delays");
  s.delays.assign(h.data(), h.data() + h.size());
  if (!j["A"].is_array()) throw SpecError("A: expected an array of matrices");
  if (j["A"].size() != s.delays.size()) {
    throw SpecError("A: expected " + std::to_string(s.delays.size()) + " matrices (one per delay), got " +
                    std::to_string(j["A"].size()));
  }
  Eigen::Index n = -1;
  for (std::size_t i = 0; i < j["A"].size(); ++i) {
    Eigen::MatrixXd a = matrix_of(j["A"][i], n, n, "A[" + std::to_string(i) + "]");
    if (n < 0) {
      n = a.rows();
      if (a.cols() != n) throw SpecError("A[0]: matrix must be square");
    }
    s.A.push_back(std::move(a));
  }
  s.B = matrix_of(j["B"], n, -1, "B");
  s.validate();

  if (!j["phi"].is_array()) throw SpecError("phi: expected an array of function descriptors");
  for (std::size_t i = 0; i < j["phi"].size(); ++i) {
    doc.init.phi.push_back(DescriptorCodec::decode(j["phi"][i], n, false, "phi[" + std::to_string(i) + "]"));
  }

  const double h_max = s.max_delay();
  if (j.contains("u")) {
    doc.input.u = DescriptorCodec::decode(j["u"], s.m(), true, "u");
  } else {
    doc.input.u = FunctionDescriptor::zero(s.m());
  }
  if (j.contains("horizon")) {
    doc.horizon = number(j["horizon"], "horizon");
    if (!(*doc.horizon > 0.0)) throw SpecError("horizon: must be positive");
  }
  if (j.contains("dt")) {
    doc.dt = number(j["dt"], "dt");
    if (!(*doc.dt > 0.0)) throw SpecError("dt: must be positive");
  }
  const double t_end = doc.horizon.value_or(std::max(1.0, 3.0 * h_max));
  const double natural_bound = doc.input.u.sup_norm(0.0, t_end);
  if (j.contains("u_bound")) {
    doc.input.bound = number(j["u_bound"], "u_bound");
    if (doc.input.bound < natural_bound) throw SpecError("u_bound: smaller than the sup-norm of u");
  } else {
    doc.input.bound = natural_bound;
  }
  validate_problem(s, doc.init, doc.input);
  return doc;
}

ProblemDocument load_spec_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open spec file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_spec(ss.str());
}

std::string serialize(const ProblemDocument& doc) {
  const SystemSpec& s = doc.spec;
  json j;
  j["alpha"] = s.order.alpha;
  j["deriv"] = to_string(s.deriv);
  j["delays"] = s.delays;
  json a = json::array();
  for (const auto& m : s.A) a.push_back(matrix_json(m));
  j["A"] = a;
  j["B"] = matrix_json(s.B);
  json phi = json::array();
  for (const auto& f : doc.init.phi) phi.push_back(DescriptorCodec::encode(f));
  j["phi"] = phi;
  j["u"] = DescriptorCodec::encode(doc.input.u);
  j["u_bound"] = doc.input.bound;
  if (doc.horizon) j["horizon"] = *doc.horizon;
  if (doc.dt) j["dt"] = *doc.dt;
  return j.dump(2);
}

}  // namespace fracdelay
