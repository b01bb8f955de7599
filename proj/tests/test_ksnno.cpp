#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "ksnno/experiments.hpp"
#include "ksnno/ksnno.hpp"
#include "oracles.hpp"

using namespace ksnno;

namespace {

Density2D logistic2d() { return Density2D(Density1D(Activation::logistic())); }

KSnnoConfig config(int n, int paths = 1000, int m = 0) {
  KSnnoConfig cfg;
  cfg.n = n;
  cfg.paths = paths;
  cfg.m = m;
  return cfg;
}

double relative_gap(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

}  // namespace

TEST(Config, Validation) {
  const Interval unit{};
  EXPECT_NO_THROW(config(20).validate(unit));
  EXPECT_THROW(config(1).validate(unit), std::domain_error);
  EXPECT_THROW(config(20, 1000, 999).validate(unit), std::invalid_argument);
  EXPECT_NO_THROW(config(20, 1000, 1000).validate(unit));
  KSnnoConfig bad_t = config(5);
  bad_t.t_grid = {0.5, 1.2};
  EXPECT_THROW(bad_t.validate(unit), std::invalid_argument);
  EXPECT_THROW(config(5, 0).validate(unit), std::invalid_argument);
  EXPECT_EQ(config(20).steps(), 2000);
  EXPECT_EQ(config(100).steps(), 5000);
}

TEST(Ksnno, DualConstructionRandomized) {
  const Density2D d2 = logistic2d();
  const Kernel2D k = example_kernel();
  std::mt19937_64 gen(123);
  std::uniform_int_distribution<int> pick_n(3, 40);
  std::uniform_real_distribution<double> pick_t(0.0, 1.0);
  double worst = 0.0;
  for (int c = 0; c < 40; ++c) {
    const int n = pick_n(gen);
    const KSnnoConfig cfg = config(n, 1, 50 * n);
    const WienerPath p = generate_wiener_path(gen(), c, cfg.steps(), k.domain);
    const double t = pick_t(gen);
    worst = std::max(worst, relative_gap(ksnno_eval(k, d2, cfg, t, p), ksnno_via_kantorovich(k, d2, cfg, t, p)));
  }
  EXPECT_LE(worst, 1e-10);
}

TEST(Ksnno, ZeroAndConstantKernels) {
  const Density2D d2 = logistic2d();
  const KSnnoConfig cfg = config(7, 1, 350);
  for (int idx = 0; idx < 3; ++idx) {
    const WienerPath p = generate_wiener_path(6, idx, 350, {});
    const double w = p.values.back();
    EXPECT_EQ(ksnno_eval(constant_kernel(0.0), d2, cfg, 0.3, p), 0.0);
    EXPECT_NEAR(ksnno_eval(constant_kernel(1.0), d2, cfg, 0.3, p), w, 1e-12);
    EXPECT_NEAR(ksnno_eval(constant_kernel(2.5), d2, cfg, 0.9, p), 2.5 * w, 1e-12);
    EXPECT_NEAR(ksnno_via_kantorovich(constant_kernel(2.5), d2, cfg, 0.9, p), 2.5 * w, 1e-12);
  }
}

TEST(Ksnno, LinearInKernel) {
  const Density2D d2 = logistic2d();
  const Kernel2D a = example_kernel();
  const Kernel2D b = kernel_from_spec("poly:3*t*s^2-0.5");
  const Kernel2D c = linear_combination(2.0, a, -1.5, b);
  const KSnnoConfig cfg = config(11, 1, 550);
  const WienerPath p = generate_wiener_path(13, 2, 550, {});
  for (double t : {0.0, 0.45, 1.0}) {
    const double lhs = ksnno_eval(c, d2, cfg, t, p);
    const double rhs = 2.0 * ksnno_eval(a, d2, cfg, t, p) - 1.5 * ksnno_eval(b, d2, cfg, t, p);
    EXPECT_NEAR(lhs, rhs, 1e-10 * std::max(1.0, std::abs(lhs)));
  }
}

TEST(Ksnno, ZeroMeanOverPaths) {
  const Density2D d2 = logistic2d();
  const Kernel2D k = example_kernel();
  const KantorovichOperator op(k, d2, 10);
  const int paths = 10000, m = 500;
  const std::vector<double> tf = op.t_factors(0.5);
  std::vector<double> h(m);
  const WienerPath grid = generate_wiener_path(1, 0, m, {});
  for (int s = 0; s < m; ++s) h[s] = op.evaluate_with(tf, grid.times[s]);
  std::vector<double> xs(paths);
  for (int p = 0; p < paths; ++p) xs[p] = ito_integral(h, generate_wiener_path(1, p, m, {}));
  const oracle::Moments mo = oracle::moments(xs);
  EXPECT_LE(std::abs(mo.mean), 3.0 * mo.se_mean);
  // Spot-check the shortcut against the full neuron construction.
  const KSnnoConfig cfg = config(10, 1, m);
  EXPECT_NEAR(xs[3], ksnno_eval(k, d2, cfg, 0.5, generate_wiener_path(1, 3, m, {})), 1e-12);
}

TEST(Ksnno, PathwiseTable) {
  const Density2D d2 = logistic2d();
  KSnnoConfig cfg = config(5, 1, 250);
  cfg.t_grid = {0.0, 0.2, 0.5, 0.7, 1.0};
  const WienerPath p = generate_wiener_path(4, 0, 250, {});
  const std::vector<PathwiseRow> rows = pathwise_error_table(example_kernel(), d2, cfg, p);
  ASSERT_EQ(rows.size(), 5u);
  for (const PathwiseRow& r : rows) {
    EXPECT_EQ(r.sq_err, r.abs_err * r.abs_err);
    EXPECT_FALSE(std::isnan(r.W));
  }
  EXPECT_EQ(rows.back().W, p.values.back());
  for (const PathwiseRow& r : pathwise_error_table(constant_kernel(0.0), d2, cfg, p)) {
    EXPECT_EQ(r.abs_err, 0.0);
    EXPECT_EQ(r.sq_err, 0.0);
  }
}

TEST(Mse, ConstantKernelNotApplicable) {
  const KSnnoConfig cfg = config(5, 200);
  const IsometryGap g = isometry_gap(constant_kernel(1.3), logistic2d(), cfg, 0.5);
  EXPECT_FALSE(g.applicable);
  EXPECT_LT(g.mse, 1e-20);
  EXPECT_TRUE(std::isinf(make_isometry_gap({1e-3, 1e-4}, 0.0, 0.15).gap));
  EXPECT_FALSE(make_isometry_gap({1e-3, 1e-4}, 0.0, 0.15).pass);
}

TEST(Mse, StandardErrorShrinksBySqrtTwo) {
  const Kernel2D k = example_kernel();
  const Density2D d2 = logistic2d();
  const MseEstimate a = mse_estimate(k, d2, config(10, 2000), 0.5);
  const MseEstimate b = mse_estimate(k, d2, config(10, 4000), 0.5);
  EXPECT_NEAR(a.standard_error / b.standard_error, std::sqrt(2.0), 0.15);
}

TEST(Mse, IsometryAtNTwenty) {
  const IsometryGap g = isometry_gap(example_kernel(), logistic2d(), config(20, 4000, 4000), 0.5);
  EXPECT_TRUE(g.applicable);
  EXPECT_LE(g.gap, 0.15) << "mse " << g.mse << " oracle " << g.oracle;
}

TEST(Mse, GridEstimateConsistentWithSinglePoint) {
  const Kernel2D k = example_kernel();
  const Density2D d2 = logistic2d();
  const KSnnoConfig cfg = config(5, 300);
  const KantorovichOperator op(k, d2, 5);
  const std::vector<double> ts{0.2, 0.5, 0.9};
  const MseGridEstimate grid = mse_estimate_grid(op, cfg, ts);
  const MseEstimate single = mse_estimate(k, d2, cfg, 0.5);
  EXPECT_DOUBLE_EQ(grid.pointwise[1].mse, single.mse);
  const double avg = (grid.pointwise[0].mse + grid.pointwise[1].mse + grid.pointwise[2].mse) / 3.0;
  EXPECT_NEAR(grid.averaged.mse, avg, 1e-14);
}

TEST(Mse, WorkerInvariant) {
  const Kernel2D k = example_kernel();
  const Density2D d2 = logistic2d();
  KSnnoConfig a = config(5, 300);
  KSnnoConfig b = a;
  b.workers = 4;
  EXPECT_EQ(mse_estimate(k, d2, a, 0.3).mse, mse_estimate(k, d2, b, 0.3).mse);
  EXPECT_EQ(mse_estimate(k, d2, a, 0.3).standard_error, mse_estimate(k, d2, b, 0.3).standard_error);
}

TEST(Mse, GapShrinksWithResolution) {
  const Kernel2D k = example_kernel();
  const Density2D d2 = logistic2d();
  const IsometryGap coarse = isometry_gap(k, d2, config(5, 250, 250), 0.5);
  const IsometryGap fine = isometry_gap(k, d2, config(5, 4000, 4000), 0.5);
  EXPECT_LE(fine.gap, 0.15);
  EXPECT_LE(fine.standard_error, coarse.standard_error);
}
