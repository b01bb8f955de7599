#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "ksnno/experiments.hpp"
#include "ksnno/kantorovich.hpp"
#include "oracles.hpp"

using namespace ksnno;

namespace {

Density2D logistic2d() { return Density2D(Density1D(Activation::logistic())); }

Kernel2D without_exact(Kernel2D k) {
  k.exact_cell_average = nullptr;
  return k;
}

}  // namespace

TEST(IndexRange, UnitInterval) {
  const IndexRange r = index_range(20, {0.0, 1.0});
  EXPECT_EQ(r.first, 0);
  EXPECT_EQ(r.last, 19);
  EXPECT_EQ(r.size(), 20);
  EXPECT_EQ(index_range(1, {0.0, 1.0}).size(), 1);
  EXPECT_THROW(index_range(1, {0.0, 0.5}), std::domain_error);
  EXPECT_THROW(index_range(0, {0.0, 1.0}), std::domain_error);
  const IndexRange shifted = index_range(4, {0.3, 1.7});
  EXPECT_EQ(shifted.first, 2);
  EXPECT_EQ(shifted.last, 5);
}

TEST(CellAverage, ClosedFormValues) {
  const Kernel2D k = example_kernel();
  EXPECT_NEAR(cell_average(k, 0, 1), 1.0 / 6.0, 1e-15);
  EXPECT_NEAR(cell_average(k, 10, 20), 331.0 * 21.0 / 48000.0, 1e-15);
}

TEST(CellAverage, QuadratureAgreesWithClosedForm) {
  const Kernel2D exact = example_kernel();
  const Kernel2D quad = without_exact(exact);
  for (int n : {1, 2, 7, 20, 33}) {
    for (long j = 0; j < n; ++j) {
      EXPECT_NEAR(cell_average(quad, j, n), cell_average(exact, j, n), 1e-12) << n << "," << j;
    }
  }
  const Kernel2D smooth{"exp", [](double t, double s) { return std::exp(t - 2 * s); }, {0.0, 1.0}, 1.0, {}};
  const double a = 0.25, b = 0.5;
  const double exact_value = 16.0 * (std::exp(b) - std::exp(a)) * (std::exp(-2 * a) - std::exp(-2 * b)) / 2.0;
  EXPECT_NEAR(cell_average(smooth, 1, 4), exact_value, 1e-12);
}

TEST(CellAverage, ConstantsPreserved) {
  const Kernel2D c = without_exact(constant_kernel(-2.5));
  for (int n : {2, 5, 13}) {
    for (long j = 0; j < n; ++j) EXPECT_NEAR(cell_average(c, j, n), -2.5, 1e-13);
  }
}

TEST(CellAverage, RejectsBadInput) {
  const Kernel2D k = example_kernel();
  EXPECT_THROW(cell_average(k, 5, 5), std::domain_error);
  EXPECT_THROW(cell_average(k, 0, 0), std::domain_error);
  QuadratureSpec bad;
  bad.order = 1;
  EXPECT_THROW(cell_average(without_exact(k), 0, 3, bad), std::invalid_argument);
}

TEST(Kantorovich, ReproducesConstants) {
  const Density2D d2 = logistic2d();
  EXPECT_NEAR(kantorovich_eval(constant_kernel(3.7), d2, 7, 0.2, 0.9), 3.7, 1e-12);
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const double c = 20.0 * u(gen) - 10.0;
    const int n = 2 + static_cast<int>(u(gen) * 60);
    const KantorovichOperator op(without_exact(constant_kernel(c)), d2, n);
    EXPECT_NEAR(op(u(gen), u(gen)), c, 1e-12 * std::max(1.0, std::abs(c)));
  }
}

TEST(Kantorovich, MatchesBruteForceOracle) {
  const Density2D d2 = logistic2d();
  const double v = kantorovich_eval(example_kernel(), d2, 20, 0.5, 0.5);
  EXPECT_NEAR(v, static_cast<double>(oracle::kantorovich_t2s(20, 0.5L, 0.5L)), 1e-8);
  for (int n : {2, 5, 11, 40}) {
    const KantorovichOperator op(example_kernel(), d2, n);
    for (double t : {0.0, 0.13, 0.77, 1.0}) {
      for (double s : {0.0, 0.41, 0.99}) {
        EXPECT_NEAR(op(t, s), static_cast<double>(oracle::kantorovich_t2s(n, t, s)), 1e-13);
      }
    }
  }
}

TEST(Kantorovich, PositivityAndMonotonicity) {
  const Density2D d2 = logistic2d();
  const Kernel2D lower = example_kernel();
  const Kernel2D upper = kernel_from_spec("poly:t^2*s+0.3*t*s^2");
  const KantorovichOperator a(lower, d2, 9), b(upper, d2, 9);
  for (double t = 0.0; t <= 1.0; t += 0.1) {
    for (double s = 0.0; s <= 1.0; s += 0.1) {
      EXPECT_LE(a(t, s), b(t, s) + 1e-15);
      EXPECT_GE(a(t, s), 0.0);
    }
  }
}

TEST(Kantorovich, LinearInKernel) {
  const Density2D d2 = logistic2d();
  const Kernel2D a = example_kernel();
  const Kernel2D b = kernel_from_spec("poly:t*s^3-2");
  const Kernel2D c = linear_combination(1.5, a, -0.25, b);
  const KantorovichOperator ka(a, d2, 12), kb(b, d2, 12), kc(c, d2, 12);
  for (double t : {0.1, 0.6}) {
    for (double s : {0.05, 0.5, 0.95}) EXPECT_NEAR(kc(t, s), 1.5 * ka(t, s) - 0.25 * kb(t, s), 1e-13);
  }
}

TEST(Kantorovich, NormalizedWeightsSumToOne) {
  const KantorovichOperator op(example_kernel(), logistic2d(), 15);
  std::vector<double> w(op.range().size());
  op.normalized_weights(0.3, 0.8, w);
  double sum = 0.0;
  for (double x : w) {
    EXPECT_GE(x, 0.0);
    sum += x;
  }
  EXPECT_NEAR(sum, 1.0, 1e-14);
}

TEST(Kantorovich, DegenerateDenominatorRaises) {
  // A density with compact support makes far-apart (t, s) weights vanish.
  const Activation hard = Activation::custom("ramp", [](double t) { return std::clamp(0.5 + 0.5 * t, 0.0, 1.0); });
  const Density2D d2{Density1D(hard)};
  const KantorovichOperator op(example_kernel(), d2, 20);
  EXPECT_THROW(op(0.0, 1.0), NumericalDegeneracyError);
  EXPECT_NO_THROW(op(0.5, 0.5));
}

TEST(Kantorovich, RejectsOutOfDomain) {
  EXPECT_THROW(kantorovich_eval(example_kernel(), logistic2d(), 5, 1.5, 0.5), std::domain_error);
}

TEST(L2Error, ConstantKernelVanishes) {
  const Density2D d2 = logistic2d();
  const Kernel2D c = constant_kernel(2.0);
  EXPECT_NEAR(l2_error_pointwise(c, d2, 10, 0.5), 0.0, 1e-12);
  EXPECT_NEAR(l2_error_mean(c, d2, 10), 0.0, 1e-12);
}

TEST(L2Error, MatchesOracleAndDoubledResolution) {
  const Density2D d2 = logistic2d();
  const Kernel2D k = example_kernel();
  const double d = l2_error_pointwise(k, d2, 20, 0.5);
  EXPECT_GT(d, 0.0);
  const double fine = l2_error_pointwise(k, d2, 20, 0.5, {}, L2ErrorOptions{}.doubled());
  EXPECT_LE(std::abs(d - fine), 0.01 * fine);
  const double simpson = static_cast<double>(oracle::l2_error_t2s(20, 0.5L));
  EXPECT_LE(std::abs(d - simpson), 0.01 * simpson);
}

TEST(L2Error, PointwiseDecreasesWhenDoublingN) {
  const Density2D d2 = logistic2d();
  const Kernel2D k = example_kernel();
  for (int n : {5, 10, 20, 40}) {
    EXPECT_LT(l2_error_pointwise(k, d2, 2 * n, 0.5), l2_error_pointwise(k, d2, n, 0.5)) << "n=" << n;
  }
}

TEST(L2Error, MeanDecreasesOverSweep) {
  const Density2D d2 = logistic2d();
  const Kernel2D k = example_kernel();
  double prev = std::numeric_limits<double>::infinity();
  for (int n : {5, 10, 20, 40, 80}) {
    const double d = l2_error_mean(k, d2, n);
    EXPECT_LT(d, prev) << "n=" << n;
    EXPECT_GE(d, 0.0);
    prev = d;
  }
}

TEST(L2Error, MeanOverSinglePointEqualsPointwise) {
  const KantorovichOperator op(example_kernel(), logistic2d(), 10);
  const std::vector<double> one{0.37};
  EXPECT_DOUBLE_EQ(l2_error_mean(op, one), l2_error_pointwise(op, 0.37));
}

TEST(L2Error, WorkerCountDoesNotChangeResult) {
  const KantorovichOperator op(example_kernel(), logistic2d(), 10);
  EXPECT_EQ(l2_error_mean(op, {}, 1), l2_error_mean(op, {}, 4));
}

TEST(Modulus, ZeroDeltaAndErrors) {
  const Kernel2D k = example_kernel();
  EXPECT_EQ(modulus_of_continuity(k, 0.0), 0.0);
  EXPECT_THROW(modulus_of_continuity(k, -0.1), std::domain_error);
  EXPECT_THROW(modulus_of_continuity(k, 1.5), std::domain_error);
}

TEST(Modulus, MonotoneAndLipschitzOne) {
  const Kernel2D k = example_kernel();
  ModulusOptions opts;
  opts.shift_points = 9;
  std::vector<std::pair<double, double>> pts;
  double prev = 0.0;
  for (double delta : {0.005, 0.01, 0.02, 0.04, 0.08}) {
    const double w = modulus_of_continuity(k, delta, opts);
    EXPECT_GE(w, prev);
    EXPECT_LT(w / delta, 2.0);
    prev = w;
    pts.emplace_back(delta, w);
  }
  EXPECT_NEAR(fit_loglog_slope(pts).slope, 1.0, 0.05);
}

TEST(Covariance, FactorizationValues) {
  const Kernel2D k = example_kernel();
  EXPECT_NEAR(covariance_factorization_check(k, 1.0, 1.0), 1.0 / 3.0, 1e-14);
  EXPECT_EQ(covariance_factorization_check(k, 0.0, 0.7), 0.0);
  EXPECT_NEAR(covariance_factorization_check(k, 0.5, 1.0), 0.25 / 3.0, 1e-14);
}

TEST(UniformGrid, EndpointsExact) {
  const std::vector<double> g = uniform_grid({0.0, 1.0}, 101);
  ASSERT_EQ(g.size(), 101u);
  EXPECT_EQ(g.front(), 0.0);
  EXPECT_EQ(g.back(), 1.0);
  EXPECT_NEAR(g[50], 0.5, 1e-16);
  EXPECT_THROW(uniform_grid({0.0, 1.0}, 0), std::invalid_argument);
}
