#include "fracdelay/fractional_calculus.hpp"
#include "fracdelay/special_functions.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <functional>

using fracdelay::FracOrder;
using fracdelay::SampledFunction;

namespace {

SampledFunction sample(const std::function<double(double)>& f, double dt, double T) {
  const auto n = static_cast<std::size_t>(std::llround(T / dt)) + 1;
  SampledFunction s = SampledFunction::uniform(0.0, dt, n, 1);
  for (std::size_t i = 0; i < n; ++i) s.values(0, static_cast<Eigen::Index>(i)) = f(s.grid[i]);
  return s;
}

// Largest relative error of D^alpha t^m on t in [t_min, 1]; absolute when the exact value is 0.
double monomial_error(int m, double alpha, double dt, double t_min = 0.1) {
  const FracOrder ord = FracOrder::from_alpha(alpha);
  const SampledFunction d = fracdelay::caputo_derivative(sample([m](double t) { return std::pow(t, m); }, dt, 1.0), ord);
  const bool vanishes = m < ord.k;
  const double c = vanishes ? 0.0 : fracdelay::gamma(m + 1.0) / fracdelay::gamma(m + 1.0 - alpha);
  double worst = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double t = d.grid[i];
    if (t < t_min - 1e-12) continue;
    const double exact = c * std::pow(t, m - alpha);
    const double err = std::abs(d.values(0, static_cast<Eigen::Index>(i)) - exact);
    worst = std::max(worst, vanishes ? err : err / std::abs(exact));
  }
  return worst;
}

}  // namespace

TEST(OrderK, IntegerAndFractional) {
  EXPECT_EQ(fracdelay::order_k(0.5), 1);
  EXPECT_EQ(fracdelay::order_k(1.0), 1);
  EXPECT_EQ(fracdelay::order_k(1.5), 2);
  EXPECT_EQ(fracdelay::order_k(2.0), 2);
  EXPECT_EQ(fracdelay::order_k(2.5), 3);
  EXPECT_THROW(FracOrder({0.5, 2}).validate(), std::invalid_argument);
  EXPECT_THROW(FracOrder::from_alpha(0.0).validate(), std::invalid_argument);
}

TEST(SampledFunction, RejectsNonUniformGrid) {
  SampledFunction s = SampledFunction::uniform(0.0, 0.1, 5, 1);
  EXPECT_NO_THROW(s.validate());
  s.grid[2] += 1e-3;
  EXPECT_THROW(s.validate(), fracdelay::GridError);
}

TEST(CaputoDerivative, TooFewSamples) {
  const SampledFunction s = sample([](double t) { return t; }, 0.1, 0.2);
  EXPECT_THROW(fracdelay::caputo_derivative(s, FracOrder::from_alpha(1.5)), fracdelay::GridError);
}

TEST(CaputoDerivative, ConstantMapsToZero) {
  const SampledFunction d = fracdelay::caputo_derivative(sample([](double) { return 3.0; }, 1e-3, 1.0),
                                                         FracOrder::from_alpha(0.5));
  EXPECT_LT(d.values.cwiseAbs().maxCoeff(), 1e-8);
}

TEST(CaputoDerivative, LinearHalfOrder) {
  const SampledFunction d = fracdelay::caputo_derivative(sample([](double t) { return t; }, 1e-3, 1.0),
                                                         FracOrder::from_alpha(0.5));
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double t = d.grid[i];
    EXPECT_NEAR(d.values(0, static_cast<Eigen::Index>(i)), 1.1283791671 * std::sqrt(t), 1e-6);
  }
}

TEST(CaputoDerivative, IntegerOrderIsClassical) {
  const double dt = 1e-3;
  const SampledFunction d =
      fracdelay::caputo_derivative(sample([](double t) { return t * t; }, dt, 1.0), FracOrder::from_alpha(1.0));
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_NEAR(d.values(0, static_cast<Eigen::Index>(i)), 2.0 * d.grid[i], 10 * dt * dt);
  }
}

TEST(CaputoDerivative, MonomialRuleAndSelfConvergence) {
  for (double alpha : {0.3, 0.5, 0.8, 1.5}) {
    for (int m : {1, 2, 3}) {
      const double e1 = monomial_error(m, alpha, 1e-3);
      const double e2 = monomial_error(m, alpha, 5e-4);
      EXPECT_LE(e1, 1e-3) << "m=" << m << " alpha=" << alpha;
      EXPECT_TRUE(e2 <= 1e-10 || e1 / e2 >= 1.8) << "m=" << m << " alpha=" << alpha << " " << e1 << " " << e2;
    }
  }
}

TEST(RlDerivative, ConstantDoesNotVanish) {
  const double c = 2.0;
  const SampledFunction d =
      fracdelay::rl_derivative(sample([c](double) { return c; }, 1e-3, 1.0), FracOrder::from_alpha(0.5));
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double t = d.grid[i];
    if (t < 0.05) continue;
    const double exact = c / (std::sqrt(t) * fracdelay::gamma(0.5));
    EXPECT_NEAR(d.values(0, static_cast<Eigen::Index>(i)), exact, 1e-3 * exact);
  }
}

TEST(RlDerivative, IntegerOrderOfLinear) {
  const SampledFunction d =
      fracdelay::rl_derivative(sample([](double t) { return t; }, 1e-3, 1.0), FracOrder::from_alpha(1.0));
  EXPECT_LT((d.values.array() - 1.0).abs().maxCoeff(), 1e-9);
}

TEST(RlDerivative, SquareRootGivesConstant) {
  const SampledFunction d =
      fracdelay::rl_derivative(sample([](double t) { return std::sqrt(t); }, 1e-3, 1.0), FracOrder::from_alpha(0.5));
  const double exact = fracdelay::gamma(1.5);
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d.grid[i] < 0.05) continue;
    EXPECT_NEAR(d.values(0, static_cast<Eigen::Index>(i)), exact, 2e-3);
  }
}

TEST(FractionalIntegral, MonomialRuleIsExactForLinear) {
  // Product integration is exact on piecewise-linear data.
  const SampledFunction f = sample([](double t) { return 1.0 + 2.0 * t; }, 0.01, 1.0);
  const Eigen::MatrixXd I = fracdelay::fractional_integral(f, 0.6);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double t = f.grid[i];
    const double exact = std::pow(t, 0.6) / fracdelay::gamma(1.6) + 2.0 * std::pow(t, 1.6) / fracdelay::gamma(2.6);
    EXPECT_NEAR(I(0, static_cast<Eigen::Index>(i)), exact, 1e-13);
  }
}

TEST(RelationResidual, ZeroFunction) {
  EXPECT_EQ(fracdelay::relation_residual(sample([](double) { return 0.0; }, 1e-3, 1.0), FracOrder::from_alpha(0.5)),
            0.0);
}

TEST(RelationResidual, AffineHalfOrder) {
  EXPECT_LE(
      fracdelay::relation_residual(sample([](double t) { return 1.0 + t; }, 1e-3, 1.0), FracOrder::from_alpha(0.5)),
      1e-4);
}

TEST(RelationResidual, SineConvergesUnderRefinement) {
  const FracOrder ord = FracOrder::from_alpha(0.7);
  auto res = [&](double dt) {
    return fracdelay::relation_residual(sample([](double t) { return std::sin(t); }, dt, 1.0), ord, 0.02);
  };
  const double r1 = res(2e-3), r2 = res(1e-3), r3 = res(5e-4);
  EXPECT_LT(r2, r1);
  EXPECT_LT(r3, r2);
  EXPECT_GE(std::log2(r1 / r3) / 2.0, 1.0 - 0.05);
}

TEST(Linearity, BothOperators) {
  const double dt = 2e-3;
  const SampledFunction f = sample([](double t) { return std::cos(3 * t) + t * t; }, dt, 1.0);
  const SampledFunction g = sample([](double t) { return std::exp(-t); }, dt, 1.0);
  SampledFunction h = f;
  h.values = 2.5 * f.values - 0.75 * g.values;
  for (double alpha : {0.4, 1.0, 1.6}) {
    const FracOrder ord = FracOrder::from_alpha(alpha);
    for (auto op : {&fracdelay::caputo_derivative, &fracdelay::rl_derivative}) {
      const Eigen::MatrixXd lhs = op(h, ord).values;
      const Eigen::MatrixXd rhs = 2.5 * op(f, ord).values - 0.75 * op(g, ord).values;
      EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-10 * std::max(1.0, rhs.cwiseAbs().maxCoeff()));
    }
  }
}

TEST(FiniteDifference, SecondOrderStencils) {
  const double h = 1e-2;
  const SampledFunction f = sample([](double t) { return t * t * t; }, h, 1.0);
  const Eigen::MatrixXd d1 = fracdelay::finite_difference(f.values, h, 1);
  for (std::size_t i = 0; i < f.size(); ++i) {
    EXPECT_NEAR(d1(0, static_cast<Eigen::Index>(i)), 3 * f.grid[i] * f.grid[i], 10 * h * h);
  }
}
