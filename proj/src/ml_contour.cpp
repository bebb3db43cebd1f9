#include "fracdelay/detail/ml_contour.hpp"

#include "fracdelay/special_functions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace fracdelay::detail {
namespace {

using cplx = std::complex<double>;
constexpr double kPi = std::numbers::pi;
const double kLogEps = std::log(std::numeric_limits<double>::epsilon());
constexpr double kInf = std::numeric_limits<double>::infinity();

struct ContourParams {
  double mu = 0.0;
  double h = 0.0;
  double N = kInf;
};

// Parameters for a contour confined between two consecutive singularities.
ContourParams optimal_bounded(double t, double phi_j, double phi_j1, double pj, double qj,
                              double log_epsilon) {
  constexpr double fac = 1.01;
  const double f_max = std::exp(log_epsilon - kLogEps);
  const double sq_phi_j = std::sqrt(phi_j);
  const double threshold = 2.0 * std::sqrt((log_epsilon - kLogEps) / t);
  const double sq_phi_j1 = std::min(std::sqrt(phi_j1), threshold - sq_phi_j);

  double sq_bar_j = 0.0;
  double sq_bar_j1 = 0.0;
  double f_bar = 1.0;
  bool admissible = false;

  if (pj < 1e-14 && qj < 1e-14) {
    sq_bar_j = sq_phi_j;
    sq_bar_j1 = sq_phi_j1;
    admissible = true;
  } else if (pj < 1e-14) {
    sq_bar_j = sq_phi_j;
    const double f_min =
        sq_phi_j > 0.0 ? fac * std::pow(sq_phi_j / (sq_phi_j1 - sq_phi_j), qj) : fac;
    if (f_min < f_max) {
      f_bar = f_min + f_min / f_max * (f_max - f_min);
      const double fq = std::pow(f_bar, -1.0 / qj);
      sq_bar_j1 = (2.0 * sq_phi_j1 - fq * sq_phi_j) / (2.0 + fq);
      admissible = true;
    }
  } else if (qj < 1e-14) {
    sq_bar_j1 = sq_phi_j1;
    const double f_min = fac * std::pow(sq_phi_j1 / (sq_phi_j1 - sq_phi_j), pj);
    if (f_min < f_max) {
      f_bar = f_min + f_min / f_max * (f_max - f_min);
      const double fp = std::pow(f_bar, -1.0 / pj);
      sq_bar_j = (2.0 * sq_phi_j + fp * sq_phi_j1) / (2.0 - fp);
      admissible = true;
    }
  } else {
    double f_min = fac * (sq_phi_j + sq_phi_j1) / std::pow(sq_phi_j1 - sq_phi_j, std::max(pj, qj));
    if (f_min < f_max) {
      f_min = std::max(f_min, 1.5);
      f_bar = f_min + f_min / f_max * (f_max - f_min);
      const double fp = std::pow(f_bar, -1.0 / pj);
      const double fq = std::pow(f_bar, -1.0 / qj);
      const double w = -phi_j1 * t / log_epsilon;
      const double den = 2.0 + w - (1.0 + w) * fp + fq;
      sq_bar_j = ((2.0 + w + fq) * sq_phi_j + fp * sq_phi_j1) / den;
      sq_bar_j1 = (-(1.0 + w) * fq * sq_phi_j + (2.0 + w - (1.0 + w) * fp) * sq_phi_j1) / den;
      admissible = true;
    }
  }
  if (!admissible) return {};

  const double le = log_epsilon - std::log(f_bar);
  const double w = -sq_bar_j1 * sq_bar_j1 * t / le;
  ContourParams out;
  out.mu = std::pow(((1.0 + w) * sq_bar_j + sq_bar_j1) / (2.0 + w), 2);
  out.h = -2.0 * kPi / le * (sq_bar_j1 - sq_bar_j) / ((1.0 + w) * sq_bar_j + sq_bar_j1);
  out.N = std::ceil(std::sqrt(1.0 - le / t / out.mu) / out.h);
  return out;
}

// Parameters for the unbounded region right of the last singularity.
ContourParams optimal_unbounded(double t, double phi_j, double pj, double log_epsilon) {
  const double sq_phi_j = std::sqrt(phi_j);
  double phibar = phi_j > 0.0 ? phi_j * 1.01 : 0.01;
  double sq_phibar = std::sqrt(phibar);
  constexpr double f_min = 1.0;
  constexpr double f_max = 10.0;
  constexpr double f_tar = 5.0;

  double N = 0.0;
  double A = 0.0;
  double sq_mu = 0.0;
  for (int iter = 0; iter < 200; ++iter) {
    const double phi_t = phibar * t;
    const double le_phi_t = log_epsilon / phi_t;
    N = std::ceil(phi_t / kPi * (1.0 - 1.5 * le_phi_t + std::sqrt(1.0 - 2.0 * le_phi_t)));
    A = kPi * N / phi_t;
    sq_mu = sq_phibar * std::abs(4.0 - A) / std::abs(7.0 - std::sqrt(1.0 + 12.0 * A));
    const double fbar = std::pow((sq_phibar - sq_phi_j) / sq_mu, -pj);
    if (pj < 1e-14 || (f_min < fbar && fbar < f_max)) break;
    sq_phibar = std::pow(f_tar, -1.0 / pj) * sq_mu + sq_phi_j;
    phibar = sq_phibar * sq_phibar;
  }
  ContourParams out;
  out.mu = sq_mu * sq_mu;
  out.h = (-3.0 * A - 2.0 + 2.0 * std::sqrt(1.0 + 12.0 * A)) / (4.0 - A) / N;
  out.N = N;

  const double threshold = (log_epsilon - kLogEps) / t;
  if (out.mu > threshold) {
    const double Q = std::abs(pj) < 1e-14 ? 0.0 : std::pow(f_tar, -1.0 / pj) * std::sqrt(out.mu);
    phibar = std::pow(Q + sq_phi_j, 2);
    if (phibar < threshold) {
      const double w = std::sqrt(kLogEps / (kLogEps - log_epsilon));
      const double u = std::sqrt(-phibar * t / kLogEps);
      out.mu = threshold;
      out.N = std::ceil(w * log_epsilon / 2.0 / kPi / (u * w - 1.0));
      out.h = std::sqrt(kLogEps / (kLogEps - log_epsilon)) / out.N;
    } else {
      out.N = kInf;
      out.h = 0.0;
    }
  }
  return out;
}

cplx series(double alpha, double beta, cplx z) {
  cplx sum = recip_gamma(beta);
  cplx zp = 1.0;
  int small = 0;
  for (int l = 1; l < 400; ++l) {
    zp *= z;
    const cplx term = zp * recip_gamma(alpha * l + beta);
    sum += term;
    if (std::abs(term) <= 1e-17 * std::abs(sum)) {
      if (++small == 2) break;
    } else {
      small = 0;
    }
  }
  return sum;
}

}  // namespace

cplx ml_laplace(double alpha, double beta, cplx lambda) {
  constexpr double t = 1.0;
  double log_epsilon = std::log(1e-15);

  const double theta = std::arg(lambda);
  const double kmin = std::ceil(-alpha / 2.0 - theta / (2.0 * kPi));
  const double kmax = std::floor(alpha / 2.0 - theta / (2.0 * kPi));
  const double rad = std::pow(std::abs(lambda), 1.0 / alpha);

  struct Pole {
    cplx s;
    double phi;
  };
  std::vector<Pole> poles;
  for (double k = kmin; k <= kmax; k += 1.0) {
    const cplx s = std::polar(rad, (theta + 2.0 * k * kPi) / alpha);
    const double phi = 0.5 * (s.real() + std::abs(s));
    if (phi > 1e-15) poles.push_back({s, phi});
  }
  std::sort(poles.begin(), poles.end(), [](const Pole& a, const Pole& b) { return a.phi < b.phi; });

  std::vector<cplx> s_star{0.0};
  std::vector<double> phi{0.0};
  for (const auto& pl : poles) {
    s_star.push_back(pl.s);
    phi.push_back(pl.phi);
  }
  const std::size_t J1 = s_star.size();
  const std::size_t J = J1 - 1;
  std::vector<double> p(J1, 1.0);
  std::vector<double> q(J1, 1.0);
  p[0] = std::max(0.0, -2.0 * (alpha - beta + 1.0));
  q[J] = kInf;
  phi.push_back(kInf);

  std::vector<std::size_t> admissible;
  for (std::size_t j = 0; j < J1; ++j) {
    if (phi[j] < (log_epsilon - kLogEps) / t && phi[j] < phi[j + 1]) admissible.push_back(j);
  }

  std::vector<ContourParams> params(J1);
  for (int attempt = 0;; ++attempt) {
    double best = kInf;
    for (std::size_t j : admissible) {
      params[j] = (j < J) ? optimal_bounded(t, phi[j], phi[j + 1], p[j], q[j], log_epsilon)
                          : optimal_unbounded(t, phi[j], p[j], log_epsilon);
      best = std::min(best, params[j].N);
    }
    if (best <= 200.0 || attempt > 20) break;
    log_epsilon += std::log(10.0);
  }

  std::size_t iN = 0;
  double N = kInf;
  for (std::size_t j : admissible) {
    if (params[j].N < N) {
      N = params[j].N;
      iN = j;
    }
  }
  if (!std::isfinite(N)) throw std::runtime_error("ml_laplace: no admissible contour");
  const double mu = params[iN].mu;
  const double h = params[iN].h;
  const int Ni = static_cast<int>(N);

  cplx integral = 0.0;
  for (int k = -Ni; k <= Ni; ++k) {
    const double u = h * k;
    const cplx z = mu * std::pow(cplx(1.0, u), 2);
    const cplx zd(-2.0 * mu * u, 2.0 * mu);
    const cplx F = std::pow(z, alpha - beta) / (std::pow(z, alpha) - lambda) * zd;
    integral += std::exp(z * t) * F;
  }
  integral *= h / (2.0 * kPi * cplx(0.0, 1.0));

  cplx residues = 0.0;
  for (std::size_t j = iN + 1; j < J1; ++j) {
    residues += std::pow(s_star[j], 1.0 - beta) * std::exp(t * s_star[j]) / alpha;
  }
  return integral + residues;
}

cplx ml_complex(double alpha, double beta, cplx z) {
  if (std::abs(z) <= 1.0) return series(alpha, beta, z);
  if (alpha == 1.0 && beta == 1.0) return std::exp(z);
  if (alpha == 1.0 && beta == std::floor(beta) && beta <= 4.0) {
    // z^(1-b) (e^z - sum_{m<b-1} z^m/m!)
    cplx poly = 0.0;
    cplx zp = 1.0;
    double fact = 1.0;
    for (int m = 0; m < static_cast<int>(beta) - 1; ++m) {
      if (m > 0) fact *= m;
      poly += zp / fact;
      zp *= z;
    }
    return (std::exp(z) - poly) / std::pow(z, beta - 1.0);
  }
  return ml_laplace(alpha, beta, z);
}

}  // namespace fracdelay::detail
