#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ksnno/activation.hpp"
#include "ksnno/kantorovich.hpp"
#include "ksnno/kernel.hpp"
#include "ksnno/stochastic.hpp"

namespace ksnno {

struct KSnnoConfig {
  int n = 20;
  int m = 0;  // path steps; 0 selects max(2000, 50 n)
  int paths = 1000;
  std::uint64_t master_seed = 20240521;
  std::vector<double> t_grid;
  QuadratureSpec quadrature;
  L2ErrorOptions l2;
  int workers = 1;

  int steps() const { return m > 0 ? m : default_path_steps(n); }
  // Throws std::invalid_argument (or std::domain_error for n) when inconsistent.
  void validate(Interval domain) const;
};

// X_n(t) = sum_j A_j phi_{j,n}(t), neurons built on the given path.
double ksnno_eval(const Kernel2D& k, const Density2D& d2, const KSnnoConfig& cfg, double t,
                  const WienerPath& path);

// int K_n(zeta)(t, s) dW_s with the same left-endpoint sum.
double ksnno_via_kantorovich(const Kernel2D& k, const Density2D& d2, const KSnnoConfig& cfg, double t,
                             const WienerPath& path);

struct PathwiseRow {
  double t = 0.0;
  double dW = 0.0;
  double W = 0.0;
  double X = 0.0;
  double Xn = 0.0;
  double abs_err = 0.0;
  double sq_err = 0.0;
};

// One row per cfg.t_grid point. dW and W are read off the path grid point
// nearest t (NaN if t is not on the grid).
std::vector<PathwiseRow> pathwise_error_table(const Kernel2D& k, const Density2D& d2, const KSnnoConfig& cfg,
                                              const WienerPath& path);

struct MseEstimate {
  double mse = 0.0;
  double standard_error = 0.0;
};

MseEstimate mse_estimate(const Kernel2D& k, const Density2D& d2, const KSnnoConfig& cfg, double t);

// Pointwise estimates for every t in ts plus the t-averaged estimate, all on
// the same P paths. The averaged SE uses per-path averages, so correlation
// across t is accounted for.
struct MseGridEstimate {
  std::vector<MseEstimate> pointwise;
  MseEstimate averaged;
};

MseGridEstimate mse_estimate_grid(const KantorovichOperator& op, const KSnnoConfig& cfg,
                                  std::span<const double> ts);

struct IsometryGap {
  double mse = 0.0;
  double standard_error = 0.0;
  double oracle = 0.0;
  double gap = 0.0;          // |mse - oracle| / oracle; +inf if oracle is zero but mse is not
  bool applicable = true;    // false when both sides vanish
  bool pass = false;
};

IsometryGap isometry_gap(const Kernel2D& k, const Density2D& d2, const KSnnoConfig& cfg, double t,
                         double tolerance = 0.15);
IsometryGap make_isometry_gap(const MseEstimate& mc, double oracle, double tolerance);

}  // namespace ksnno
