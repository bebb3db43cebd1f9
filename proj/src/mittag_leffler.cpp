#include "fracdelay/detail/ml_contour.hpp"
#include "fracdelay/special_functions.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace fracdelay {
namespace {

// Losing more digits than this to cancellation abandons the series.
const double kMaxCancellation = 1.0 / std::sqrt(std::numeric_limits<double>::epsilon());
// Below this loss factor the series result is kept as is.
constexpr double kBenignCancellation = 100.0;

struct SeriesResult {
  double value = 0.0;
  double abs_sum = 0.0;  // sum of |terms|, i.e. E(|z|)
};

SeriesResult sum_series(const MLParams& p, double z, const SeriesControl& ctl) {
  SeriesResult r;
  r.value = recip_gamma(p.beta);
  r.abs_sum = std::abs(r.value);
  double zp = 1.0;
  int small = 0;
  for (int l = 1; l <= ctl.max_terms; ++l) {
    zp *= z;
    double term;
    if (std::isfinite(zp)) {
      term = zp * recip_gamma(p.alpha * l + p.beta);
    } else {
      const double lg = l * std::log(std::abs(z)) - std::lgamma(p.alpha * l + p.beta);
      term = std::exp(lg) * ((z < 0.0 && (l % 2 == 1)) ? -1.0 : 1.0);
    }
    r.value += term;
    r.abs_sum += std::abs(term);
    if (std::abs(term) <= ctl.rel_tol * std::abs(r.value)) {
      if (++small == 2) return r;
    } else {
      small = 0;
    }
  }
  const double est = std::abs(zp * recip_gamma(p.alpha * ctl.max_terms + p.beta)) /
                     std::max(std::abs(r.value), std::numeric_limits<double>::min());
  throw MLConvergenceError("ml_series: max_terms=" + std::to_string(ctl.max_terms) +
                               " reached before rel_tol",
                           r.value, est);
}

// Expansion on the negative axis truncated at its smallest term.
// Returns false when the attainable accuracy misses rel_tol.
bool optimally_truncated_asymptotic(const MLParams& p, double z, double rel_tol, double& out) {
  double sum = 0.0;
  double prev = std::numeric_limits<double>::infinity();
  double zp = 1.0;
  for (int j = 1; j <= 500; ++j) {
    zp /= z;
    const double term = zp * recip_gamma(p.beta - p.alpha * j);
    const double mag = std::abs(term);
    if (mag == 0.0) continue;  // pole of Gamma, term vanishes exactly
    if (mag > prev) break;
    sum -= term;
    prev = mag;
    if (mag <= 0.1 * rel_tol * std::abs(sum)) {
      out = sum;
      return true;
    }
  }
  out = sum;
  return prev <= rel_tol * std::abs(sum);
}

}  // namespace

void MLParams::validate() const {
  if (!(alpha > 0.0) || !(beta > 0.0) || !std::isfinite(alpha) || !std::isfinite(beta)) {
    throw std::invalid_argument("MLParams: alpha and beta must be positive and finite");
  }
}

void SeriesControl::validate() const {
  if (!(rel_tol > 0.0 && rel_tol < 1.0)) throw std::invalid_argument("SeriesControl: rel_tol must lie in (0,1)");
  if (max_terms < 1) throw std::invalid_argument("SeriesControl: max_terms must be >= 1");
  if (asym_N < 1) throw std::invalid_argument("SeriesControl: asym_N must be >= 1");
}

double ml_series(const MLParams& p, double z, const SeriesControl& ctl) {
  p.validate();
  ctl.validate();
  return sum_series(p, z, ctl).value;
}

double ml_scalar(const MLParams& p, double z, const SeriesControl& ctl) {
  p.validate();
  ctl.validate();
  if (z == 0.0) return recip_gamma(p.beta);
  if (p.alpha == 1.0 && p.beta == 1.0) return std::exp(z);

  const double az = std::abs(z);
  const double growth = std::pow(az, 1.0 / p.alpha);  // log E(|z|) for large |z|

  if (z > 0.0) {
    const double needed = 2.72 * growth / p.alpha + 60.0;
    if (needed <= ctl.max_terms || az <= 1.0) return sum_series(p, z, ctl).value;
    return detail::ml_laplace(p.alpha, p.beta, {z, 0.0}).real();
  }

  bool heavy_cancellation = growth >= std::log(kMaxCancellation) && az > 1.0;
  if (!heavy_cancellation) {
    const SeriesResult r = sum_series(p, z, ctl);
    if (r.abs_sum <= kBenignCancellation * std::abs(r.value)) return r.value;
    heavy_cancellation = r.abs_sum > kMaxCancellation * std::abs(r.value);
  }
  if (heavy_cancellation && p.alpha < 2.0) {
    double v = 0.0;
    if (optimally_truncated_asymptotic(p, z, ctl.rel_tol, v)) return v;
  }
  return detail::ml_laplace(p.alpha, p.beta, {z, 0.0}).real();
}

double ml_asymptotic(const MLParams& p, double z, const SeriesControl& ctl) {
  p.validate();
  ctl.validate();
  if (!(p.alpha < 2.0)) throw std::invalid_argument("ml_asymptotic: requires 0 < alpha < 2");
  if (z == 0.0) throw MLRegimeError("ml_asymptotic: z = 0 is outside the asymptotic regime");

  double sum = 0.0;
  double zp = 1.0;
  double last_retained = 0.0;
  for (int j = 1; j <= ctl.asym_N; ++j) {
    zp /= z;
    const double term = zp * recip_gamma(p.beta - p.alpha * j);
    if (term != 0.0) last_retained = std::abs(term);
    sum -= term;
  }
  // First non-vanishing neglected term must be smaller than the last retained one.
  for (int j = ctl.asym_N + 1; j <= ctl.asym_N + 4 && last_retained > 0.0; ++j) {
    zp /= z;
    const double term = std::abs(zp * recip_gamma(p.beta - p.alpha * j));
    if (term == 0.0) continue;
    if (term >= last_retained) {
      throw MLRegimeError("ml_asymptotic: |z| too small, expansion terms are not decreasing");
    }
    break;
  }
  if (z > 0.0) {
    sum += std::pow(z, (1.0 - p.beta) / p.alpha) * std::exp(std::pow(z, 1.0 / p.alpha)) / p.alpha;
  }
  return sum;
}

double ml_norm_bound(const MLParams& p, double norm_A, double t, const SeriesControl& ctl) {
  if (norm_A < 0.0 || t < 0.0) throw std::invalid_argument("ml_norm_bound: norm_A and t must be >= 0");
  return ml_scalar(p, norm_A * std::pow(t, p.alpha), ctl);
}

}  // namespace fracdelay
