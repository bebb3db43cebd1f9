#include "fracdelay/analysis.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

namespace fracdelay {
namespace {

constexpr double kBetaFloor = 1e-6;
constexpr double kInactiveBeta = 1e-8;
constexpr int kMaxSweeps = 200;
constexpr double kSweepTolerance = 1e-8;

double spectral_norm(const Eigen::MatrixXd& A) {
  if (A.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A * A.transpose(), Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

double stacked_unchecked(const std::vector<Eigen::MatrixXd>& mats, const std::vector<double>& beta) {
  if (mats.empty()) return 0.0;
  const Eigen::Index n = mats.front().rows();
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < mats.size(); ++i) G += mats[i] * mats[i].transpose() / (beta[i] * beta[i]);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

// Moves coordinate i to x and rescales the others to stay on the unit sphere.
std::vector<double> with_coordinate(const std::vector<double>& beta, std::size_t i, double x) {
  std::vector<double> b = beta;
  double rest = 0.0;
  for (std::size_t j = 0; j < b.size(); ++j) {
    if (j != i) rest += b[j] * b[j];
  }
  const double target = std::max(0.0, 1.0 - x * x);
  for (std::size_t j = 0; j < b.size(); ++j) {
    if (j == i) continue;
    b[j] = rest > 0.0 ? b[j] * std::sqrt(target / rest) : std::sqrt(target / static_cast<double>(b.size() - 1));
  }
  b[i] = x;
  return b;
}

BetaOptimum descend(const std::vector<Eigen::MatrixXd>& mats, std::vector<double> beta) {
  double best = stacked_unchecked(mats, beta);
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    const double start = best;
    for (std::size_t i = 0; i < beta.size(); ++i) {
      double lo = kBetaFloor;
      double hi = 1.0 - kBetaFloor;
      auto f = [&](double x) { return stacked_unchecked(mats, with_coordinate(beta, i, x)); };
      double x1 = hi - phi * (hi - lo);
      double x2 = lo + phi * (hi - lo);
      double f1 = f(x1);
      double f2 = f(x2);
      while (hi - lo > 1e-10) {
        if (f1 <= f2) {
          hi = x2;
          x2 = x1;
          f2 = f1;
          x1 = hi - phi * (hi - lo);
          f1 = f(x1);
        } else {
          lo = x1;
          x1 = x2;
          f1 = f2;
          x2 = lo + phi * (hi - lo);
          f2 = f(x2);
        }
      }
      const double x = 0.5 * (lo + hi);
      const double fx = f(x);
      if (fx < best) {
        best = fx;
        beta = with_coordinate(beta, i, x);
      }
    }
    if (start - best <= kSweepTolerance * std::max(best, 1e-300)) break;
  }
  return {beta, best};
}

struct Certificate {
  double mu = 0.0;
  BetaOptimum opt;
};

std::vector<Eigen::MatrixXd> delay_blocks(const SystemSpec& g) {
  return {g.A.begin() + 1, g.A.end()};
}

}  // namespace

std::string to_string(StabilityVerdict v) {
  switch (v) {
    case StabilityVerdict::GloballyStable:
      return "GloballyStable";
    case StabilityVerdict::GloballyAsymptoticallyStable:
      return "GloballyAsymptoticallyStable";
    case StabilityVerdict::Inconclusive:
      return "Inconclusive";
    case StabilityVerdict::Alpha2Advisory:
      return "Alpha2Advisory";
  }
  return "unknown";
}

std::string to_string(StabilityRoute r) {
  switch (r) {
    case StabilityRoute::DirectMeasure:
      return "DirectMeasure";
    case StabilityRoute::FractionalPower:
      return "FractionalPower";
    case StabilityRoute::CanonicalForm:
      return "CanonicalForm";
  }
  return "unknown";
}

double matrix_measure_l2(const Eigen::MatrixXd& A) {
  if (A.rows() != A.cols() || A.size() == 0) throw std::invalid_argument("matrix_measure_l2: square matrix required");
  const Eigen::MatrixXd S = 0.5 * (A + A.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

double stacked_norm(const std::vector<Eigen::MatrixXd>& mats, const std::vector<double>& beta) {
  if (mats.size() != beta.size()) throw std::invalid_argument("stacked_norm: one weight per block required");
  if (mats.empty()) return 0.0;
  double sum = 0.0;
  for (double b : beta) {
    if (!(b > 0.0)) throw std::invalid_argument("stacked_norm: weights must be positive");
    sum += b * b;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument("stacked_norm: weights must satisfy sum beta^2 = 1");
  for (const auto& m : mats) {
    if (m.rows() != mats.front().rows()) throw std::invalid_argument("stacked_norm: blocks need equal row counts");
  }
  return stacked_unchecked(mats, beta);
}

BetaOptimum optimize_beta(const std::vector<Eigen::MatrixXd>& mats) {
  const std::size_t p = mats.size();
  if (p == 0) return {};
  if (p == 1) return {{1.0}, spectral_norm(mats[0])};

  std::vector<std::size_t> active;
  std::vector<double> norms;
  for (std::size_t i = 0; i < p; ++i) {
    const double nrm = spectral_norm(mats[i]);
    if (nrm > 0.0) {
      active.push_back(i);
      norms.push_back(nrm);
    }
  }
  std::vector<double> beta(p, kInactiveBeta);
  if (active.empty()) {
    std::fill(beta.begin(), beta.end(), 1.0 / std::sqrt(static_cast<double>(p)));
    return {beta, 0.0};
  }

  std::vector<Eigen::MatrixXd> sub;
  for (std::size_t i : active) sub.push_back(mats[i]);
  BetaOptimum best;
  if (sub.size() == 1) {
    best = {{1.0}, norms[0]};
  } else {
    const double a = static_cast<double>(sub.size());
    BetaOptimum uniform = descend(sub, std::vector<double>(sub.size(), 1.0 / std::sqrt(a)));
    double total = 0.0;
    for (double nrm : norms) total += nrm * nrm;
    std::vector<double> prop;
    for (double nrm : norms) prop.push_back(nrm / std::sqrt(total));
    BetaOptimum proportional = descend(sub, prop);
    best = uniform.value <= proportional.value ? uniform : proportional;
  }

  // Zero blocks get a negligible weight; rescale the rest onto the sphere.
  const double inactive = static_cast<double>(p - active.size()) * kInactiveBeta * kInactiveBeta;
  const double scale = std::sqrt(1.0 - inactive);
  for (std::size_t j = 0; j < active.size(); ++j) beta[active[j]] = best.beta[j] * scale;
  return {beta, stacked_unchecked(mats, beta)};
}

CanonicalForm canonical_decomposition(const Eigen::MatrixXd& A0) {
  if (A0.rows() != A0.cols() || A0.size() == 0) {
    throw std::invalid_argument("canonical_decomposition: square matrix required");
  }
  const Eigen::Index n = A0.rows();
  CanonicalForm cf;
  const Eigen::MatrixXd off = A0 - Eigen::MatrixXd(A0.diagonal().asDiagonal());
  if ((off.array() == 0.0).all()) {
    cf.T = Eigen::MatrixXd::Identity(n, n);
    cf.J_d = A0;
    cf.J_off = Eigen::MatrixXd::Zero(n, n);
    return cf;
  }
  Eigen::RealSchur<Eigen::MatrixXd> schur(A0);
  const Eigen::MatrixXd& S = schur.matrixT();
  cf.T = schur.matrixU().transpose();
  cf.J_d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n;) {
    if (i + 1 < n && S(i + 1, i) != 0.0) {
      const double re = 0.5 * (S(i, i) + S(i + 1, i + 1));
      cf.J_d(i, i) = re;
      cf.J_d(i + 1, i + 1) = re;
      i += 2;
    } else {
      cf.J_d(i, i) = S(i, i);
      i += 1;
    }
  }
  cf.J_off = S - cf.J_d;
  const double clean = 1e-13 * A0.norm();
  cf.J_off = cf.J_off.unaryExpr([clean](double v) { return std::abs(v) <= clean ? 0.0 : v; });
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(cf.T);
  const auto& sv = svd.singularValues();
  cf.condition = sv(0) / sv(sv.size() - 1);
  cf.ill_conditioned = cf.condition > 1e8;
  return cf;
}

std::optional<Eigen::MatrixXd> fractional_power(const Eigen::MatrixXd& A0, double alpha) {
  using cplx = std::complex<double>;
  const double scale = std::max(1.0, A0.norm());
  Eigen::EigenSolver<Eigen::MatrixXd> es(A0);
  if (es.info() != Eigen::Success) return std::nullopt;
  const Eigen::VectorXcd lambda = es.eigenvalues();
  const Eigen::MatrixXcd V = es.eigenvectors();
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    const cplx l = lambda[i];
    if (std::abs(l) <= 1e-12 * scale) return std::nullopt;
    if (std::abs(l.imag()) <= 1e-12 * std::abs(l) && l.real() < 0.0) return std::nullopt;
  }
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(V);
  const auto& sv = svd.singularValues();
  if (!(sv(sv.size() - 1) > 0.0) || sv(0) / sv(sv.size() - 1) > 1e8) return std::nullopt;
  Eigen::VectorXcd powered(lambda.size());
  for (Eigen::Index i = 0; i < lambda.size(); ++i) powered[i] = std::exp(std::log(lambda[i]) / alpha);
  const Eigen::MatrixXcd P = V * powered.asDiagonal() * V.inverse();
  if (P.imag().cwiseAbs().maxCoeff() > 1e-8 * std::max(1.0, P.real().norm())) return std::nullopt;
  return Eigen::MatrixXd(P.real());
}

namespace {

Certificate direct_certificate(const SystemSpec& g) {
  return {matrix_measure_l2(g.A[0]), optimize_beta(delay_blocks(g))};
}

Certificate canonical_certificate(const SystemSpec& g, CanonicalForm& cf) {
  cf = canonical_decomposition(g.A[0]);
  const Eigen::MatrixXd Tinv = cf.T.inverse();
  std::vector<Eigen::MatrixXd> blocks{cf.J_off};
  for (std::size_t i = 1; i < g.A.size(); ++i) blocks.push_back(cf.T * g.A[i] * Tinv);
  return {cf.J_d.diagonal().maxCoeff(), optimize_beta(blocks)};
}

}  // namespace

StabilityReport stability_verdict(const SystemSpec& s) {
  s.validate();
  const SystemSpec g = grouped_spec(s);
  const double alpha = g.order.alpha;
  StabilityReport r;

  CanonicalForm cf;
  const Certificate direct = direct_certificate(g);
  const Certificate canon = canonical_certificate(g, cf);
  if (cf.ill_conditioned) r.notes.push_back("canonical transform is ill-conditioned, cond(T)=" + std::to_string(cf.condition));

  // Dimensionally consistent bounds that hold for 0 < alpha <= 1.
  const bool guard_strict =
      (direct.mu < 0.0 && direct.opt.value < -direct.mu) || (canon.mu < 0.0 && canon.opt.value < -canon.mu);
  const bool guard_weak =
      (direct.mu <= 0.0 && direct.opt.value <= -direct.mu) || (canon.mu <= 0.0 && canon.opt.value <= -canon.mu);
  r.guard = "stacked delay gain against |mu_2| of A0 or of the diagonal canonical part (exponent 1)";

  auto use_canonical = [&] {
    r.route = StabilityRoute::CanonicalForm;
    r.mu2 = canon.mu;
    r.threshold = std::pow(std::abs(canon.mu), 1.0 / alpha);
    r.stacked_norm = canon.opt.value;
    r.beta = canon.opt.beta;
    r.transform = cf;
    r.criterion = "canonical real form: stacked norm of [J_off, T A_i T^-1] against |mu_2(J_d)|^(1/alpha)";
  };

  std::optional<Eigen::MatrixXd> power;
  if (alpha == 1.0) {
    r.route = StabilityRoute::DirectMeasure;
    r.mu2 = direct.mu;
    r.threshold = -direct.mu;
    r.stacked_norm = direct.opt.value;
    r.beta = direct.opt.beta;
    r.criterion = "l2 measure of A0 against the stacked delay gain";
  } else if (alpha < 1.0 && (power = fractional_power(g.A[0], alpha))) {
    r.route = StabilityRoute::FractionalPower;
    r.mu2 = matrix_measure_l2(*power);
    r.threshold = -r.mu2;
    r.stacked_norm = direct.opt.value;
    r.beta = direct.opt.beta;
    r.criterion = "l2 measure of the principal power A0^(1/alpha) against the stacked delay gain";
    r.notes.push_back("non-strict inequality read as global stability, strict inequality with negative measure as "
                      "asymptotic stability");
  } else {
    use_canonical();
    if (alpha < 1.0) r.notes.push_back("principal power A0^(1/alpha) unavailable; canonical route used");
  }

  if (alpha > 1.0) {
    r.guard_passed = false;
    r.verdict = StabilityVerdict::Inconclusive;
    r.notes.push_back(alpha >= 2.0 ? "alpha >= 2: only the bounded-solution advisory applies"
                                   : "criteria are established for 0 < alpha <= 1 only; certificate reported as advisory");
    return r;
  }

  const bool literal_strict = r.mu2 < 0.0 && r.stacked_norm < r.threshold;
  const bool literal_weak = r.mu2 <= 0.0 && r.stacked_norm <= r.threshold;
  if (literal_strict && guard_strict) {
    r.verdict = StabilityVerdict::GloballyAsymptoticallyStable;
    r.guard_passed = true;
  } else if (literal_weak && guard_weak) {
    r.verdict = StabilityVerdict::GloballyStable;
    r.guard_passed = true;
  } else {
    r.verdict = StabilityVerdict::Inconclusive;
    r.guard_passed = guard_weak;
    if (literal_weak && !guard_weak) {
      r.notes.push_back("route inequality holds but the delay gain exceeds |mu_2|; verdict withheld");
    }
  }
  return r;
}

AdvisoryReport alpha_ge2_advisory(const SystemSpec& s, const InitialData& init) {
  s.validate();
  const double alpha = s.order.alpha;
  if (alpha < 2.0) throw std::invalid_argument("alpha_ge2_advisory: requires alpha >= 2");
  if (init.phi.size() != static_cast<std::size_t>(s.order.k)) {
    throw std::invalid_argument("alpha_ge2_advisory: expected k initial functions");
  }
  const SystemSpec g = grouped_spec(s);
  AdvisoryReport a;
  for (int j = 0; j < s.order.k && j < alpha - 1.0; ++j) {
    a.required_zero.push_back(j);
    if (!init.phi[static_cast<std::size_t>(j)].identically_zero()) a.nonzero_required.push_back(j);
  }

  CanonicalForm cf;
  const Certificate canon = canonical_certificate(g, cf);
  StabilityReport& c = a.canonical;
  c.route = StabilityRoute::CanonicalForm;
  c.mu2 = canon.mu;
  c.threshold = std::pow(std::abs(canon.mu), 1.0 / alpha);
  c.stacked_norm = canon.opt.value;
  c.beta = canon.opt.beta;
  c.transform = cf;
  c.criterion = "canonical real form: stacked norm of [J_off, T A_i T^-1] against |mu_2(J_d)|^(1/alpha)";
  const bool holds = canon.mu < 0.0 && c.stacked_norm < c.threshold;
  c.verdict = StabilityVerdict::Inconclusive;

  if (!a.nonzero_required.empty()) {
    a.verdict = StabilityVerdict::Inconclusive;
    a.reason.clear();
    for (int j : a.nonzero_required) {
      if (!a.reason.empty()) a.reason += "; ";
      a.reason += "j=" + std::to_string(j) + " < alpha-1 requires zero phi_" + std::to_string(j);
    }
  } else if (!holds) {
    a.verdict = StabilityVerdict::Inconclusive;
    a.reason = "canonical inequality with negative measure not satisfied";
  } else {
    a.verdict = StabilityVerdict::Alpha2Advisory;
    a.reason = "unforced solutions bounded (not a global stability result)";
  }
  return a;
}

}  // namespace fracdelay
