#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "ksnno/activation.hpp"
#include "ksnno/kernel.hpp"
#include "ksnno/quadrature.hpp"

namespace ksnno {

// Raised when the normalizing sum of density weights underflows.
class NumericalDegeneracyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kDenominatorGuard = 1e-300;

// Per-cell tensor Gauss-Legendre used when no closed-form cell average exists.
struct QuadratureSpec {
  int panels_per_cell = 1;
  int order = 6;

  void validate() const;
};

// Integration resolution for the s-axis L2 integrals and the t-grid average.
struct L2ErrorOptions {
  int s_panels = 64;
  int s_order = 8;
  int t_points = 101;

  L2ErrorOptions doubled() const { return {2 * s_panels, s_order, t_points}; }
};

// j = ceil(n c) .. floor(n d) - 1.
struct IndexRange {
  long first = 0;
  long last = -1;

  long size() const { return last - first + 1; }
};

// Throws std::domain_error when the range is empty.
IndexRange index_range(int n, Interval domain);

// n^2 times the integral of zeta over [j/n, (j+1)/n]^2.
double cell_average(const Kernel2D& k, long j, int n, const QuadratureSpec& q = {});

// The diagonal-index operator
//   K_n(zeta)(t, s) = sum_j Phi(nt - j, ns - j) A_j / sum_j Phi(nt - j, ns - j)
// with cell averages A_j precomputed once per (kernel, n).
class KantorovichOperator {
 public:
  KantorovichOperator(Kernel2D kernel, Density2D density, int n, const QuadratureSpec& q = {});

  double operator()(double t, double s) const;

  // Normalized weights Phi(nt - j, ns - j) / sum, indexed from range().first.
  // Throws NumericalDegeneracyError if the sum is below the guard.
  void normalized_weights(double t, double s, std::span<double> out) const;

  // L(nt - j) for every j in range; reused across many s values.
  std::vector<double> t_factors(double t) const;
  double evaluate_with(std::span<const double> t_factors, double s) const;

  const std::vector<double>& cell_averages() const { return cell_averages_; }
  const Kernel2D& kernel() const { return kernel_; }
  const Density2D& density() const { return density_; }
  IndexRange range() const { return range_; }
  int n() const { return n_; }

 private:
  Kernel2D kernel_;
  Density2D density_;
  int n_;
  IndexRange range_;
  std::vector<double> cell_averages_;
};

double kantorovich_eval(const Kernel2D& k, const Density2D& d2, int n, double t, double s,
                        const QuadratureSpec& q = {});

// D(n, t) = integral over the domain of |K_n(zeta)(t, s) - zeta(t, s)|^2 ds.
double l2_error_pointwise(const KantorovichOperator& op, double t, const L2ErrorOptions& opts = {});
double l2_error_pointwise(const Kernel2D& k, const Density2D& d2, int n, double t,
                          const QuadratureSpec& q = {}, const L2ErrorOptions& opts = {});

// Average of D(n, t) over a uniform grid of opts.t_points points on the domain.
double l2_error_mean(const KantorovichOperator& op, const L2ErrorOptions& opts = {}, int workers = 1);
double l2_error_mean(const KantorovichOperator& op, std::span<const double> t_grid,
                     const L2ErrorOptions& opts = {}, int workers = 1);
double l2_error_mean(const Kernel2D& k, const Density2D& d2, int n, const QuadratureSpec& q = {},
                     const L2ErrorOptions& opts = {}, int workers = 1);

struct ModulusOptions {
  int shift_points = 33;  // per axis, over [-delta, delta]
  int panels = 16;
  int order = 6;
};

// Sampled L2-modulus of continuity W_2(zeta, delta) restricted to the overlap
// of the shifted and unshifted domains.
double modulus_of_continuity(const Kernel2D& k, double delta, const ModulusOptions& opts = {});

// integral over the domain of zeta(t, s) zeta(u, s) ds.
double covariance_factorization_check(const Kernel2D& k, double t, double u,
                                      const L2ErrorOptions& opts = {});

std::vector<double> uniform_grid(Interval domain, int points);

}  // namespace ksnno
