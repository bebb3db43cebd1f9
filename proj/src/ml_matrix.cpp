#include "fracdelay/detail/ml_contour.hpp"
#include "fracdelay/special_functions.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <unordered_map>

namespace fracdelay {
namespace {

using cplx = std::complex<double>;

// Eigenvalues closer than this are treated as a cluster and their divided
// differences are taken from a Cauchy integral instead of the recurrence.
constexpr double kClusterSeparation = 0.1;
constexpr int kContourNodes = 64;

// Divided differences f[lambda_S] over subsets S of the Schur diagonal.
class DividedDifferences {
 public:
  DividedDifferences(const Eigen::VectorXcd& lambda, double alpha, double beta)
      : lambda_(lambda), alpha_(alpha), beta_(beta) {}

  cplx operator()(unsigned mask) {
    if (auto it = memo_.find(mask); it != memo_.end()) return it->second;
    const cplx v = compute(mask);
    memo_.emplace(mask, v);
    return v;
  }

 private:
  cplx f(cplx z) const { return detail::ml_complex(alpha_, beta_, z); }

  cplx compute(unsigned mask) {
    std::vector<int> idx;
    for (int i = 0; i < static_cast<int>(lambda_.size()); ++i) {
      if (mask & (1u << i)) idx.push_back(i);
    }
    if (idx.size() == 1) return f(lambda_[idx[0]]);

    int a = idx[0];
    int b = idx[1];
    double dmax = -1.0;
    for (std::size_t x = 0; x < idx.size(); ++x) {
      for (std::size_t y = x + 1; y < idx.size(); ++y) {
        const double d = std::abs(lambda_[idx[x]] - lambda_[idx[y]]);
        if (d > dmax) {
          dmax = d;
          a = idx[x];
          b = idx[y];
        }
      }
    }
    if (dmax >= kClusterSeparation) {
      return ((*this)(mask & ~(1u << a)) - (*this)(mask & ~(1u << b))) / (lambda_[b] - lambda_[a]);
    }

    cplx c = 0.0;
    for (int i : idx) c += lambda_[i];
    c /= static_cast<double>(idx.size());
    double dev = 0.0;
    for (int i : idx) dev = std::max(dev, std::abs(lambda_[i] - c));
    const double r = std::max(2.0 * dev, 0.25);
    cplx acc = 0.0;
    for (int m = 0; m < kContourNodes; ++m) {
      const cplx w = std::polar(r, 2.0 * std::numbers::pi * m / kContourNodes);
      const cplx zeta = c + w;
      cplx den = 1.0;
      for (int i : idx) den *= (zeta - lambda_[i]);
      acc += f(zeta) * w / den;
    }
    return acc / static_cast<double>(kContourNodes);
  }

  Eigen::VectorXcd lambda_;
  double alpha_;
  double beta_;
  std::unordered_map<unsigned, cplx> memo_;
};

// f(T) for upper-triangular T as a sum over increasing index paths of
// products of off-diagonal entries times divided differences.
Eigen::MatrixXcd triangular_function(const Eigen::MatrixXcd& T, DividedDifferences& dd) {
  const int n = static_cast<int>(T.rows());
  Eigen::MatrixXcd F = Eigen::MatrixXcd::Zero(n, n);
  struct Frame {
    int node;
    unsigned mask;
    cplx prod;
  };
  std::vector<Frame> stack;
  for (int i = 0; i < n; ++i) {
    F(i, i) = dd(1u << i);
    stack.push_back({i, 1u << i, 1.0});
    while (!stack.empty()) {
      const Frame fr = stack.back();
      stack.pop_back();
      for (int j = fr.node + 1; j < n; ++j) {
        const cplx tij = T(fr.node, j);
        if (tij == cplx(0.0)) continue;
        const unsigned mask = fr.mask | (1u << j);
        const cplx prod = fr.prod * tij;
        F(i, j) += prod * dd(mask);
        stack.push_back({j, mask, prod});
      }
    }
  }
  return F;
}

Eigen::MatrixXd series_matrix(double alpha, double beta, const Eigen::MatrixXd& A,
                              const SeriesControl& ctl) {
  const Eigen::Index n = A.rows();
  Eigen::MatrixXd sum = Eigen::MatrixXd::Identity(n, n) * recip_gamma(beta);
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n, n);
  int small = 0;
  for (int l = 1; l <= ctl.max_terms; ++l) {
    power = power * A;
    const Eigen::MatrixXd term = power * recip_gamma(alpha * l + beta);
    sum += term;
    const double tn = term.lpNorm<1>();
    if (tn <= ctl.rel_tol * sum.lpNorm<1>()) {
      if (++small == 2) return sum;
    } else {
      small = 0;
    }
  }
  throw MLConvergenceError("ml_matrix: max_terms reached before rel_tol", sum.norm(),
                           (power * recip_gamma(alpha * ctl.max_terms + beta)).norm());
}

double induced_one_norm(const Eigen::MatrixXd& A) {
  return A.cwiseAbs().colwise().sum().maxCoeff();
}

}  // namespace

std::vector<Eigen::MatrixXd> ml_matrix_multi(double alpha, std::span<const double> betas,
                                             const Eigen::MatrixXd& A, const SeriesControl& ctl) {
  if (A.rows() != A.cols()) throw std::invalid_argument("ml_matrix: matrix must be square");
  for (double b : betas) MLParams{alpha, b}.validate();
  ctl.validate();
  std::vector<Eigen::MatrixXd> out;
  out.reserve(betas.size());
  const Eigen::Index n = A.rows();
  if (n == 0) {
    out.assign(betas.size(), Eigen::MatrixXd(0, 0));
    return out;
  }
  if (induced_one_norm(A) <= 1.0) {
    for (double b : betas) out.push_back(series_matrix(alpha, b, A, ctl));
    return out;
  }
  if (n == 1) {
    for (double b : betas) out.push_back(Eigen::MatrixXd::Constant(1, 1, ml_scalar({alpha, b}, A(0, 0), ctl)));
    return out;
  }
  if (n > 16) throw std::invalid_argument("ml_matrix: dimensions above 16 are not supported");

  Eigen::ComplexSchur<Eigen::MatrixXcd> schur(A.cast<cplx>());
  const Eigen::MatrixXcd& T = schur.matrixT();
  const Eigen::MatrixXcd& U = schur.matrixU();
  const Eigen::VectorXcd lambda = T.diagonal();
  for (double b : betas) {
    DividedDifferences dd(lambda, alpha, b);
    const Eigen::MatrixXcd F = triangular_function(T, dd);
    out.push_back((U * F * U.adjoint()).real());
  }
  return out;
}

Eigen::MatrixXd ml_matrix(const MLParams& p, const Eigen::MatrixXd& A, const SeriesControl& ctl) {
  const double beta[1] = {p.beta};
  return std::move(ml_matrix_multi(p.alpha, beta, A, ctl).front());
}

}  // namespace fracdelay
