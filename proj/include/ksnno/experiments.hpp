#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ksnno/ksnno.hpp"

namespace ksnno {

// ---- Table 1: one sample path at n = 20 ---------------------------------

struct Table1Row {
  double t, dW, W, X, Xn, abs_err, sq_err;
};

// The 21 published rows on the 0.05 grid, columns t, dW, W, X, Xn, |err|, err^2.
const std::array<Table1Row, 21>& table1_reference();

// The t and dW columns of the published table as a fixture.
IncrementFixture embedded_table1_fixture();

struct ColumnDeviation {
  std::string column;
  double max_abs = 0.0;
  double at_t = 0.0;
};

struct Table1Report {
  int n = 20;
  std::vector<Table1Row> rows;  // recomputed
  TimeRule rule = TimeRule::Trapezoid;
  std::map<std::string, double> rule_max_deviation;  // X column deviation per candidate rule
  std::vector<ColumnDeviation> deviations;          // W, X, Xn, abs_err, sq_err
  double reference_consistency = 0.0;  // max |X_ref(t) - X_ref(1) t^2|
  double recomputed_consistency = 0.0; // max |X(t) - X(1) t^2|
  double boundary_sq_err = 0.0;        // recomputed squared error at the last row
  double interior_max_sq_err = 0.0;    // max over rows with t <= 0.8
  double max_sq_err_at = 0.0;

  const ColumnDeviation& deviation(const std::string& column) const;
};

// Recomputes W, X (calibrating the rule for the time integral of W against the
// published X column), Xn and the error columns from the fixture increments.
// Throws std::invalid_argument unless the fixture has 21 rows on the 0.05 grid.
Table1Report reproduce_table1(const IncrementFixture& fixture, int n = 20,
                              const Density2D& d2 = Density2D(Density1D(Activation::logistic())));

// ---- Covariance ----------------------------------------------------------

struct CovarianceEntry {
  double t = 0.0;
  double s = 0.0;
  double empirical = 0.0;  // mean over paths of X_t X_s
  double standard_error = 0.0;
  double analytic = 0.0;   // integral of zeta(t, .) zeta(s, .)
  bool within_3se = false;
};

struct CovarianceReport {
  int paths = 0;
  int steps = 0;
  std::uint64_t seed = 0;
  std::vector<CovarianceEntry> entries;  // all pairs t_i <= t_j of the grid

  bool all_within() const;
};

// Throws std::invalid_argument if paths < 1000.
CovarianceReport covariance_check(const Kernel2D& k, int paths, std::uint64_t seed, const std::vector<double>& t_grid,
                                  int m = 2000, int workers = 1);

// ---- MSE sweep and rate fit ---------------------------------------------

struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t points = 0;
};

// Least squares of log(value) on log(n). Throws std::domain_error on fewer
// than 3 points or a non-positive value.
LogLogFit fit_loglog_slope(const std::vector<std::pair<double, double>>& points);

struct MsePointwise {
  double t = 0.0;
  double mse = 0.0;
  double standard_error = 0.0;
  double oracle = 0.0;
};

struct MseEntry {
  int n = 0;
  int steps = 0;
  double mse_mc = 0.0;          // t-grid averaged
  double mse_se = 0.0;
  double oracle_d = 0.0;        // t-grid averaged D(n, t)
  double oracle_d_fine = 0.0;   // same at doubled s-resolution
  double isometry_gap = 0.0;
  bool gap_checked = false;     // D > 10 SE
  bool gap_pass = true;
  std::vector<MsePointwise> pointwise;

  // Monte-Carlo value where its SE is within 25% of it, otherwise the oracle.
  double fit_value() const;
  bool mc_usable() const { return mse_mc > 0.0 && mse_se <= 0.25 * mse_mc; }
};

struct MseReport {
  std::vector<MseEntry> entries;
  LogLogFit fit;          // on fit_value()
  LogLogFit fit_mc;       // Monte-Carlo only, noisy n excluded (empty if < 3 usable)
  LogLogFit fit_oracle;   // on oracle_d
  LogLogFit fit_oracle_fine;
  double tolerance = 0.15;

  bool oracle_strictly_decreasing() const;
  bool all_gaps_pass() const;
};

// cfg.t_grid empty selects 101 uniform points. Per-n path steps follow cfg.steps()
// evaluated at that n.
MseReport mse_sweep(const Kernel2D& k, const Density2D& d2, const std::vector<int>& ns, const KSnnoConfig& cfg,
                    double tolerance = 0.15);

// ---- Run manifest --------------------------------------------------------

struct RunManifest {
  std::string command;
  std::map<std::string, std::string> config;
  std::uint64_t master_seed = 0;
  std::string version;
  std::string started;
  std::string finished;
  std::map<std::string, std::string> file_digests;  // file -> sha256
  std::map<std::string, std::string> results;

  std::string to_json() const;
};

std::string code_version();

}  // namespace ksnno
