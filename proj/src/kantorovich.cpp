#include "ksnno/kantorovich.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "ksnno/parallel.hpp"

namespace ksnno {

void QuadratureSpec::validate() const {
  if (panels_per_cell < 1) throw std::invalid_argument("quadrature: panels_per_cell must be positive");
  if (order < 2) throw std::invalid_argument("quadrature: order must be >= 2");
}

IndexRange index_range(int n, Interval domain) {
  if (n < 1) throw std::domain_error(fmt::format("operator order n = {} must be positive", n));
  IndexRange r;
  r.first = static_cast<long>(std::ceil(n * domain.lo));
  r.last = static_cast<long>(std::floor(n * domain.hi)) - 1;
  if (r.first > r.last) {
    throw std::domain_error(fmt::format("empty index range {}..{} for n = {} on [{}, {}]", r.first,
                                        r.last, n, domain.lo, domain.hi));
  }
  return r;
}

double cell_average(const Kernel2D& k, long j, int n, const QuadratureSpec& q) {
  if (n < 1) throw std::domain_error("cell_average: n must be positive");
  const double lo = static_cast<double>(j) / n;
  const double hi = static_cast<double>(j + 1) / n;
  if (!k.domain.contains(lo) || !k.domain.contains(hi)) {
    throw std::domain_error(fmt::format("cell_average: cell [{}, {}] outside [{}, {}]", lo, hi,
                                        k.domain.lo, k.domain.hi));
  }
  if (k.exact_cell_average) return k.exact_cell_average(j, n);
  q.validate();
  const QuadratureRule rule = composite_gauss_legendre(lo, hi, q.panels_per_cell, q.order);
  double acc = 0.0;
  for (std::size_t a = 0; a < rule.nodes.size(); ++a) {
    double row = 0.0;
    for (std::size_t b = 0; b < rule.nodes.size(); ++b) row += rule.weights[b] * k(rule.nodes[a], rule.nodes[b]);
    acc += rule.weights[a] * row;
  }
  return static_cast<double>(n) * n * acc;
}

KantorovichOperator::KantorovichOperator(Kernel2D kernel, Density2D density, int n, const QuadratureSpec& q)
    : kernel_(std::move(kernel)), density_(std::move(density)), n_(n), range_(index_range(n, kernel_.domain)) {
  cell_averages_.reserve(range_.size());
  for (long j = range_.first; j <= range_.last; ++j) cell_averages_.push_back(cell_average(kernel_, j, n_, q));
}

std::vector<double> KantorovichOperator::t_factors(double t) const {
  const Density1D& d = density_.density();
  std::vector<double> out(range_.size());
  for (long i = 0; i < range_.size(); ++i) out[i] = d(n_ * t - static_cast<double>(range_.first + i));
  return out;
}

double KantorovichOperator::evaluate_with(std::span<const double> t_factors, double s) const {
  const Density1D& d = density_.density();
  double num = 0.0;
  double den = 0.0;
  for (long i = 0; i < range_.size(); ++i) {
    const double w = t_factors[i] * d(n_ * s - static_cast<double>(range_.first + i));
    num += w * cell_averages_[i];
    den += w;
  }
  if (!(den >= kDenominatorGuard)) {
    throw NumericalDegeneracyError(fmt::format("normalizing sum {} below guard at n = {}, s = {}", den, n_, s));
  }
  return num / den;
}

double KantorovichOperator::operator()(double t, double s) const {
  const std::vector<double> tf = t_factors(t);
  return evaluate_with(tf, s);
}

void KantorovichOperator::normalized_weights(double t, double s, std::span<double> out) const {
  const Density2D& phi = density_;
  double den = 0.0;
  for (long i = 0; i < range_.size(); ++i) {
    const double j = static_cast<double>(range_.first + i);
    out[i] = phi(n_ * t - j, n_ * s - j);
    den += out[i];
  }
  if (!(den >= kDenominatorGuard)) {
    throw NumericalDegeneracyError(fmt::format("normalizing sum {} below guard at n = {}, t = {}, s = {}",
                                               den, n_, t, s));
  }
  for (long i = 0; i < range_.size(); ++i) out[i] /= den;
}

double kantorovich_eval(const Kernel2D& k, const Density2D& d2, int n, double t, double s,
                        const QuadratureSpec& q) {
  if (!k.domain.contains(t) || !k.domain.contains(s)) {
    throw std::domain_error("kantorovich_eval: (t, s) outside the kernel domain");
  }
  return KantorovichOperator(k, d2, n, q)(t, s);
}

double l2_error_pointwise(const KantorovichOperator& op, double t, const L2ErrorOptions& opts) {
  const Kernel2D& k = op.kernel();
  if (!k.domain.contains(t)) throw std::domain_error("l2_error_pointwise: t outside the kernel domain");
  const QuadratureRule rule = composite_gauss_legendre(k.domain.lo, k.domain.hi, opts.s_panels, opts.s_order);
  const std::vector<double> tf = op.t_factors(t);
  CompensatedSum acc;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double s = rule.nodes[i];
    const double diff = op.evaluate_with(tf, s) - k(t, s);
    acc.add(rule.weights[i] * diff * diff);
  }
  return acc.value();
}

double l2_error_pointwise(const Kernel2D& k, const Density2D& d2, int n, double t,
                          const QuadratureSpec& q, const L2ErrorOptions& opts) {
  return l2_error_pointwise(KantorovichOperator(k, d2, n, q), t, opts);
}

double l2_error_mean(const KantorovichOperator& op, const L2ErrorOptions& opts, int workers) {
  const std::vector<double> grid = uniform_grid(op.kernel().domain, opts.t_points);
  return l2_error_mean(op, grid, opts, workers);
}

double l2_error_mean(const KantorovichOperator& op, std::span<const double> grid, const L2ErrorOptions& opts,
                     int workers) {
  if (grid.empty()) throw std::invalid_argument("l2_error_mean: empty t-grid");
  std::vector<double> values(grid.size());
  parallel_for(grid.size(), workers, [&](std::size_t i) { values[i] = l2_error_pointwise(op, grid[i], opts); });
  CompensatedSum acc;
  for (double v : values) acc.add(v);
  return acc.value() / static_cast<double>(values.size());
}

double l2_error_mean(const Kernel2D& k, const Density2D& d2, int n, const QuadratureSpec& q,
                     const L2ErrorOptions& opts, int workers) {
  return l2_error_mean(KantorovichOperator(k, d2, n, q), opts, workers);
}

double modulus_of_continuity(const Kernel2D& k, double delta, const ModulusOptions& opts) {
  if (delta < 0.0 || !std::isfinite(delta)) throw std::domain_error("modulus_of_continuity: delta must be >= 0");
  if (delta > k.domain.length()) throw std::domain_error("modulus_of_continuity: delta exceeds domain length");
  if (delta == 0.0) return 0.0;
  const int points = std::max(2, opts.shift_points);
  double best = 0.0;
  for (int a = 0; a < points; ++a) {
    const double h1 = -delta + 2.0 * delta * a / (points - 1);
    const double lo1 = std::max(k.domain.lo, k.domain.lo - h1);
    const double hi1 = std::min(k.domain.hi, k.domain.hi - h1);
    const QuadratureRule r1 = composite_gauss_legendre(lo1, hi1, opts.panels, opts.order);
    for (int b = 0; b < points; ++b) {
      const double h2 = -delta + 2.0 * delta * b / (points - 1);
      const double lo2 = std::max(k.domain.lo, k.domain.lo - h2);
      const double hi2 = std::min(k.domain.hi, k.domain.hi - h2);
      const QuadratureRule r2 = composite_gauss_legendre(lo2, hi2, opts.panels, opts.order);
      double acc = 0.0;
      for (std::size_t x = 0; x < r1.nodes.size(); ++x) {
        const double v1 = r1.nodes[x];
        double row = 0.0;
        for (std::size_t y = 0; y < r2.nodes.size(); ++y) {
          const double v2 = r2.nodes[y];
          const double diff = k(v1 + h1, v2 + h2) - k(v1, v2);
          row += r2.weights[y] * diff * diff;
        }
        acc += r1.weights[x] * row;
      }
      best = std::max(best, std::sqrt(acc));
    }
  }
  return best;
}

double covariance_factorization_check(const Kernel2D& k, double t, double u, const L2ErrorOptions& opts) {
  if (!k.domain.contains(t) || !k.domain.contains(u)) {
    throw std::domain_error("covariance_factorization_check: point outside the kernel domain");
  }
  const QuadratureRule rule = composite_gauss_legendre(k.domain.lo, k.domain.hi, opts.s_panels, opts.s_order);
  return rule.integrate([&](double s) { return k(t, s) * k(u, s); });
}

std::vector<double> uniform_grid(Interval domain, int points) {
  if (points < 1) throw std::invalid_argument("uniform_grid: need at least one point");
  if (points == 1) return {domain.lo};
  std::vector<double> grid(points);
  for (int i = 0; i < points; ++i) grid[i] = domain.lo + domain.length() * i / (points - 1);
  grid.back() = domain.hi;
  return grid;
}

}  // namespace ksnno
