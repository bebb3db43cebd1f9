#include "fracdelay/special_functions.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fracdelay {
namespace {

bool is_nonpositive_integer(double x) { return x <= 0.0 && x == std::floor(x); }

// sin(pi x) with exact argument reduction so large |x| keeps full accuracy.
double sinpi(double x) {
  double r = std::fmod(x, 2.0);
  if (r > 1.0) r -= 2.0;
  if (r < -1.0) r += 2.0;
  if (r > 0.5) r = 1.0 - r;
  if (r < -0.5) r = -1.0 - r;
  return std::sin(std::numbers::pi * r);
}

}  // namespace

double gamma(double x) {
  if (std::isnan(x)) return x;
  if (is_nonpositive_integer(x)) throw std::domain_error("gamma: pole at nonpositive integer");
  if (x > 171.62) throw std::overflow_error("gamma: result overflows");
  const double g = std::tgamma(x);
  if (!std::isfinite(g)) throw std::overflow_error("gamma: result overflows");
  return g;
}

double recip_gamma(double x) {
  if (std::isnan(x)) return x;
  if (is_nonpositive_integer(x)) return 0.0;
  if (x > 171.62) return 0.0;
  if (x < 0.5) {
    // 1/Gamma(x) = sin(pi x) Gamma(1-x) / pi; Gamma(1-x) may overflow for very negative x.
    const double r = std::tgamma(1.0 - x);
    if (!std::isfinite(r)) throw std::overflow_error("recip_gamma: result overflows");
    return sinpi(x) * r / std::numbers::pi;
  }
  return 1.0 / std::tgamma(x);
}

}  // namespace fracdelay
