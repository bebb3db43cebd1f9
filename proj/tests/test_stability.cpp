#include "fracdelay/analysis.hpp"
#include "random_specs.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace fracdelay;
using Eigen::MatrixXd;

namespace {

MatrixXd m2(double a, double b, double c, double d) { return (MatrixXd(2, 2) << a, b, c, d).finished(); }
MatrixXd s1(double a) { return MatrixXd::Constant(1, 1, a); }

SystemSpec make(double alpha, std::vector<double> h, std::vector<MatrixXd> A) {
  SystemSpec s;
  s.order = FracOrder::from_alpha(alpha);
  s.delays = std::move(h);
  s.A = std::move(A);
  s.B = MatrixXd::Ones(s.A[0].rows(), 1);
  return s;
}

InitialData zero_phi0_unit_rest(const SystemSpec& s) {
  InitialData init;
  init.phi.push_back(FunctionDescriptor::zero(s.n()));
  for (int j = 1; j < s.order.k; ++j) init.phi.push_back(FunctionDescriptor::constant(Eigen::VectorXd::Ones(s.n())));
  return init;
}

}  // namespace

TEST(MatrixMeasure, Examples) {
  EXPECT_DOUBLE_EQ(matrix_measure_l2(m2(-1, 0, 0, -3)), -1.0);
  EXPECT_NEAR(matrix_measure_l2(m2(0, 1, -1, 0)), 0.0, 1e-15);
  EXPECT_NEAR(matrix_measure_l2(m2(-2, 1, 0, -2)), -1.5, 1e-14);
}

TEST(MatrixMeasure, DominatesSpectralAbscissa) {
  fracdelay::testing::Rng rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = rng.integer(1, 4);
    const MatrixXd A = rng.matrix(n, n, -3.0, 3.0);
    const double abscissa = Eigen::EigenSolver<MatrixXd>(A).eigenvalues().real().maxCoeff();
    EXPECT_GE(matrix_measure_l2(A) + 1e-12, abscissa);
  }
}

TEST(StackedNorm, Examples) {
  const MatrixXd A = m2(1, 2, -3, 0.5);
  EXPECT_NEAR(stacked_norm({A}, {1.0}), Eigen::JacobiSVD<MatrixXd>(A).singularValues()(0), 1e-14);
  EXPECT_EQ(stacked_norm({MatrixXd::Zero(2, 2), MatrixXd::Zero(2, 2)}, {std::sqrt(0.5), std::sqrt(0.5)}), 0.0);
  EXPECT_NEAR(stacked_norm({s1(3), s1(4)}, {0.6, 0.8}), 5.0 * std::sqrt(2.0), 1e-14);
}

TEST(StackedNorm, WeightConstraintEnforced) {
  EXPECT_THROW(stacked_norm({s1(1), s1(1)}, {0.5, 0.5}), std::invalid_argument);
  EXPECT_THROW(stacked_norm({s1(1), s1(1)}, {1.0, 0.0}), std::invalid_argument);
  EXPECT_THROW(stacked_norm({s1(1)}, {1.0, 0.0}), std::invalid_argument);
}

TEST(StackedNorm, PermutationInvariant) {
  fracdelay::testing::Rng rng(19);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<MatrixXd> mats;
    std::vector<double> beta;
    for (int i = 0; i < 3; ++i) {
      mats.push_back(rng.matrix(3, 3, -1, 1));
      beta.push_back(rng.uniform(0.1, 1.0));
    }
    const double norm = std::sqrt(std::inner_product(beta.begin(), beta.end(), beta.begin(), 0.0));
    for (double& b : beta) b /= norm;
    std::vector<int> perm{2, 0, 1};
    std::vector<MatrixXd> pm;
    std::vector<double> pb;
    for (int i : perm) {
      pm.push_back(mats[i]);
      pb.push_back(beta[i]);
    }
    EXPECT_NEAR(stacked_norm(mats, beta), stacked_norm(pm, pb), 1e-12);
  }
}

TEST(OptimizeBeta, ScalarBlocksReachSumOfNorms) {
  // For scalar blocks the minimum of sqrt(sum a_i^2 / beta_i^2) is sum |a_i|.
  const BetaOptimum opt = optimize_beta({s1(3), s1(4)});
  EXPECT_NEAR(opt.value, 7.0, 1e-7);
  EXPECT_NEAR(opt.beta[0] * opt.beta[0] + opt.beta[1] * opt.beta[1], 1.0, 1e-12);
  EXPECT_NEAR(opt.beta[0], std::sqrt(3.0 / 7.0), 1e-4);
}

TEST(OptimizeBeta, ZeroBlocksKeepPositiveWeights) {
  const BetaOptimum opt = optimize_beta({s1(3), s1(0), s1(4)});
  EXPECT_NEAR(opt.value, 7.0, 1e-6);
  double sum = 0.0;
  for (double b : opt.beta) {
    EXPECT_GT(b, 0.0);
    sum += b * b;
  }
  EXPECT_NEAR(sum, 1.0, 1e-12);
  EXPECT_NO_THROW(stacked_norm({s1(3), s1(0), s1(4)}, opt.beta));
}

TEST(OptimizeBeta, NeverWorseThanUniform) {
  fracdelay::testing::Rng rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<MatrixXd> mats;
    for (int i = 0; i < 3; ++i) mats.push_back(rng.matrix(2, 2, -1, 1) * rng.uniform(0.1, 3.0));
    const std::vector<double> uniform(3, 1.0 / std::sqrt(3.0));
    EXPECT_LE(optimize_beta(mats).value, stacked_norm(mats, uniform) + 1e-12);
  }
}

TEST(CanonicalDecomposition, Diagonal) {
  const MatrixXd D = m2(-1, 0, 0, -4);
  const CanonicalForm cf = canonical_decomposition(D);
  EXPECT_EQ(cf.T, MatrixXd::Identity(2, 2));
  EXPECT_TRUE(cf.J_off.isZero(0.0));
  EXPECT_EQ(cf.J_d, D);
}

TEST(CanonicalDecomposition, SymmetricGivesEigenvalues) {
  const MatrixXd S = m2(-2, 1, 1, -3);
  const CanonicalForm cf = canonical_decomposition(S);
  EXPECT_LT((cf.T * cf.T.transpose() - MatrixXd::Identity(2, 2)).norm(), 1e-14);
  EXPECT_TRUE(cf.J_off.isZero(0.0));
  std::vector<double> d{cf.J_d(0, 0), cf.J_d(1, 1)};
  std::sort(d.begin(), d.end());
  const Eigen::Vector2d ev = Eigen::SelfAdjointEigenSolver<MatrixXd>(S).eigenvalues();
  EXPECT_NEAR(d[0], ev(0), 1e-14);
  EXPECT_NEAR(d[1], ev(1), 1e-14);
}

TEST(CanonicalDecomposition, RotationSplitsIntoRealPartAndRemainder) {
  const MatrixXd R = m2(0, 1, -1, 0);
  const CanonicalForm cf = canonical_decomposition(R);
  EXPECT_TRUE(cf.J_d.isZero(1e-15));
  EXPECT_LT((cf.T.inverse() * (cf.J_d + cf.J_off) * cf.T - R).norm(), 1e-12);
  EXPECT_NEAR(std::abs(cf.J_off(0, 1)), 1.0, 1e-14);
}

TEST(CanonicalDecomposition, ReconstructionOnRandomMatrices) {
  fracdelay::testing::Rng rng(29);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = rng.integer(1, 4);
    const MatrixXd A = rng.matrix(n, n, -2, 2);
    const CanonicalForm cf = canonical_decomposition(A);
    EXPECT_LE((cf.T.inverse() * (cf.J_d + cf.J_off) * cf.T - A).norm(), 1e-10 * A.norm());
    EXPECT_TRUE((cf.J_d - MatrixXd(cf.J_d.diagonal().asDiagonal())).isZero(0.0));
    EXPECT_FALSE(cf.ill_conditioned);
  }
}

TEST(FractionalPower, SquareOfComplexSpectrum) {
  const MatrixXd A = m2(-1, 2, -2, -1);  // eigenvalues -1 +- 2i
  const auto P = fractional_power(A, 0.5);
  ASSERT_TRUE(P.has_value());
  EXPECT_LT((*P - A * A).norm(), 1e-12);
}

TEST(FractionalPower, UnavailableOnNegativeAxisOrSingular) {
  EXPECT_FALSE(fractional_power(m2(-1, 0, 0, -2), 0.5).has_value());
  EXPECT_FALSE(fractional_power(m2(0, 0, 0, 1), 0.5).has_value());
  EXPECT_FALSE(fractional_power(m2(1, 1, 0, 1), 0.5).has_value());  // Jordan block
  EXPECT_TRUE(fractional_power(m2(2, 0, 0, 3), 0.5).has_value());
}

TEST(StabilityVerdict, ScalarNoDelay) {
  const StabilityReport r = stability_verdict(make(1.0, {0.0}, {s1(-1)}));
  EXPECT_EQ(r.verdict, StabilityVerdict::GloballyAsymptoticallyStable);
  EXPECT_EQ(r.route, StabilityRoute::DirectMeasure);
  EXPECT_DOUBLE_EQ(r.mu2, -1.0);
  EXPECT_EQ(r.stacked_norm, 0.0);
}

TEST(StabilityVerdict, ScalarOneDelay) {
  const StabilityReport r = stability_verdict(make(1.0, {0.0, 1.0}, {s1(-2), s1(1)}));
  EXPECT_EQ(r.verdict, StabilityVerdict::GloballyAsymptoticallyStable);
  EXPECT_NEAR(r.stacked_norm, 1.0, 1e-12);
  EXPECT_NEAR(r.beta[0], 1.0, 0.0);
}

TEST(StabilityVerdict, BoundaryCaseIsOnlyStable) {
  const StabilityReport r = stability_verdict(make(1.0, {0.0, 1.0}, {s1(-2), s1(2)}));
  EXPECT_EQ(r.verdict, StabilityVerdict::GloballyStable);
}

TEST(StabilityVerdict, PositiveMeasureInconclusive) {
  for (double alpha : {0.5, 0.9, 1.0}) {
    const StabilityReport r = stability_verdict(make(alpha, {0.0, 0.5}, {m2(0.5, 0, 0, -1), m2(0.1, 0, 0, 0.1)}));
    EXPECT_EQ(r.verdict, StabilityVerdict::Inconclusive) << alpha;
  }
}

TEST(StabilityVerdict, FractionalPowerRoute) {
  const StabilityReport r = stability_verdict(make(0.5, {0.0, 1.0}, {m2(-1, 2, -2, -1), m2(0.2, 0, 0, 0.2)}));
  EXPECT_EQ(r.route, StabilityRoute::FractionalPower);
  EXPECT_NEAR(r.mu2, matrix_measure_l2(m2(-1, 2, -2, -1) * m2(-1, 2, -2, -1)), 1e-12);
}

TEST(StabilityVerdict, CanonicalRouteScalarThreshold) {
  // Real negative diagonal J_d: the threshold is |most positive diagonal entry|^(1/alpha).
  for (double alpha : {0.3, 0.6, 1.0}) {
    SystemSpec s = make(alpha, {0.0, 1.0}, {m2(-0.5, 0, 0, -0.9), m2(0.1, 0, 0, 0.1)});
    const CanonicalForm cf = canonical_decomposition(s.A[0]);
    const double most_positive = cf.J_d.diagonal().maxCoeff();
    EXPECT_EQ(std::pow(std::abs(matrix_measure_l2(cf.J_d)), 1.0 / alpha), std::pow(std::abs(most_positive), 1.0 / alpha));
    if (alpha < 1.0) {
      const StabilityReport r = stability_verdict(s);
      EXPECT_EQ(r.route, StabilityRoute::CanonicalForm);
      EXPECT_EQ(r.threshold, std::pow(0.5, 1.0 / alpha));
    }
  }
}

TEST(StabilityVerdict, GuardWithholdsDimensionallyInconsistentClaim) {
  // |mu|^(1/alpha) = 4 admits the delay gain 3 although the delayed loop gain exceeds |mu| = 2.
  const StabilityReport r = stability_verdict(make(0.5, {0.0, 1.0}, {s1(-2), s1(3)}));
  EXPECT_EQ(r.verdict, StabilityVerdict::Inconclusive);
  EXPECT_FALSE(r.guard_passed);
  EXPECT_FALSE(r.notes.empty());
}

TEST(StabilityVerdict, HigherOrderIsAdvisoryOnly) {
  const StabilityReport r = stability_verdict(make(1.5, {0.0, 0.5}, {s1(-2), s1(0.1)}));
  EXPECT_EQ(r.verdict, StabilityVerdict::Inconclusive);
  EXPECT_EQ(r.route, StabilityRoute::CanonicalForm);
  EXPECT_FALSE(r.notes.empty());
}

TEST(StabilityVerdict, BetaOnSphere) {
  fracdelay::testing::Rng rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    const SystemSpec s = fracdelay::testing::random_spec(rng, {.n = 3, .p = 3, .alpha = 1.0, .shift = 3.0});
    const StabilityReport r = stability_verdict(s);
    double sum = 0.0;
    for (double b : r.beta) {
      EXPECT_GT(b, 0.0);
      sum += b * b;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(Alpha2Advisory, ZeroFirstFunction) {
  const SystemSpec s = make(2.0, {0.0, 0.5}, {m2(-2, 0, 0, -3), m2(0.3, 0, 0, 0.2)});
  const AdvisoryReport a = alpha_ge2_advisory(s, zero_phi0_unit_rest(s));
  EXPECT_EQ(a.verdict, StabilityVerdict::Alpha2Advisory);
  EXPECT_EQ(a.required_zero, std::vector<int>{0});
}

TEST(Alpha2Advisory, NonzeroFirstFunction) {
  const SystemSpec s = make(2.0, {0.0, 0.5}, {m2(-2, 0, 0, -3), m2(0.3, 0, 0, 0.2)});
  InitialData init = zero_phi0_unit_rest(s);
  init.phi[0] = FunctionDescriptor::constant(Eigen::Vector2d(1, 0));
  const AdvisoryReport a = alpha_ge2_advisory(s, init);
  EXPECT_EQ(a.verdict, StabilityVerdict::Inconclusive);
  EXPECT_EQ(a.reason, "j=0 < alpha-1 requires zero phi_0");
}

TEST(Alpha2Advisory, RequiredZeroSet) {
  const SystemSpec s = make(2.5, {0.0, 0.5}, {m2(-2, 0, 0, -3), m2(0.3, 0, 0, 0.2)});
  const AdvisoryReport a = alpha_ge2_advisory(s, zero_phi0_unit_rest(s));
  EXPECT_EQ(a.required_zero, (std::vector<int>{0, 1}));
  EXPECT_EQ(a.nonzero_required, std::vector<int>{1});
  EXPECT_THROW(alpha_ge2_advisory(make(1.5, {0.0}, {s1(-1)}), InitialData{}), std::invalid_argument);
}

TEST(StabilityReport, JsonCarriesCertificate) {
  const std::string js = to_json(stability_verdict(make(0.5, {0.0, 1.0}, {m2(-1, 0.2, 0, -2), m2(0.1, 0, 0, 0.1)})));
  for (const char* key : {"\"verdict\"", "\"route\"", "\"mu2\"", "\"beta\"", "\"stacked_norm\"", "\"guard\""}) {
    EXPECT_NE(js.find(key), std::string::npos) << key;
  }
}
