#include "ksnno/ksnno.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "ksnno/parallel.hpp"

namespace ksnno {

void KSnnoConfig::validate(Interval domain) const {
  if (n < 2) throw std::domain_error(fmt::format("operator order n = {} must be >= 2", n));
  index_range(n, domain);
  if (steps() < 50 * n) {
    throw std::invalid_argument(fmt::format("path steps m = {} must be >= 50 n = {}", steps(), 50 * n));
  }
  if (paths < 1) throw std::invalid_argument("path count must be positive");
  if (workers < 1) throw std::invalid_argument("workers must be positive");
  quadrature.validate();
  for (double t : t_grid) {
    if (!domain.contains(t)) throw std::invalid_argument(fmt::format("t = {} outside [{}, {}]", t, domain.lo, domain.hi));
  }
}

double ksnno_eval(const Kernel2D& k, const Density2D& d2, const KSnnoConfig& cfg, double t,
                  const WienerPath& path) {
  const IndexRange range = index_range(cfg.n, path.interval());
  const std::vector<double> phi = stochastic_neurons(d2, cfg.n, t, path);
  double acc = 0.0;
  for (long i = 0; i < range.size(); ++i) acc += cell_average(k, range.first + i, cfg.n, cfg.quadrature) * phi[i];
  return acc;
}

double ksnno_via_kantorovich(const Kernel2D& k, const Density2D& d2, const KSnnoConfig& cfg, double t,
                             const WienerPath& path) {
  Kernel2D restricted = k;
  restricted.domain = path.interval();
  const KantorovichOperator op(std::move(restricted), d2, cfg.n, cfg.quadrature);
  const std::vector<double> tf = op.t_factors(t);
  double acc = 0.0;
  for (std::size_t s = 0; s < path.steps(); ++s) acc += op.evaluate_with(tf, path.times[s]) * path.increments[s];
  return acc;
}

std::vector<PathwiseRow> pathwise_error_table(const Kernel2D& k, const Density2D& d2, const KSnnoConfig& cfg,
                                              const WienerPath& path) {
  std::vector<PathwiseRow> rows;
  rows.reserve(cfg.t_grid.size());
  const double slack = 1e-9 * std::max(1.0, path.interval().length());
  for (double t : cfg.t_grid) {
    PathwiseRow r;
    r.t = t;
    const auto it = std::lower_bound(path.times.begin(), path.times.end(), t - slack);
    const std::size_t i = static_cast<std::size_t>(it - path.times.begin());
    if (i < path.times.size() && std::abs(path.times[i] - t) <= slack) {
      r.W = path.values[i];
      r.dW = i == 0 ? 0.0 : path.increments[i - 1];
    } else {
      r.W = r.dW = std::numeric_limits<double>::quiet_NaN();
    }
    r.X = sample_process(k, path, t);
    r.Xn = ksnno_eval(k, d2, cfg, t, path);
    r.abs_err = std::abs(r.X - r.Xn);
    r.sq_err = r.abs_err * r.abs_err;
    rows.push_back(r);
  }
  return rows;
}

MseGridEstimate mse_estimate_grid(const KantorovichOperator& op, const KSnnoConfig& cfg,
                                  std::span<const double> ts) {
  if (cfg.paths < 2) throw std::invalid_argument("mse_estimate: need at least two paths");
  if (ts.empty()) throw std::invalid_argument("mse_estimate: empty t-grid");
  const Kernel2D& k = op.kernel();
  const int steps = cfg.steps();
  const std::size_t T = ts.size();

  // Error integrand K_n(zeta)(t, s_k) - zeta(t, s_k) at the left endpoints; the
  // grid is shared by every path.
  const WienerPath grid = generate_wiener_path(cfg.master_seed, 0, steps, k.domain);
  std::vector<double> integrand(T * steps);
  parallel_for(T, cfg.workers, [&](std::size_t a) {
    const std::vector<double> tf = op.t_factors(ts[a]);
    for (int s = 0; s < steps; ++s) {
      const double sv = grid.times[s];
      integrand[a * steps + s] = op.evaluate_with(tf, sv) - k(ts[a], sv);
    }
  });

  const std::size_t P = static_cast<std::size_t>(cfg.paths);
  std::vector<double> sq(P * T);
  parallel_for(P, cfg.workers, [&](std::size_t p) {
    const WienerPath path = generate_wiener_path(cfg.master_seed, p, steps, k.domain);
    for (std::size_t a = 0; a < T; ++a) {
      const double e = ito_integral(std::span<const double>(integrand.data() + a * steps, steps), path);
      sq[p * T + a] = e * e;
    }
  });

  auto summarize = [P](auto value_at) {
    CompensatedSum s1, s2;
    for (std::size_t p = 0; p < P; ++p) {
      const double v = value_at(p);
      s1.add(v);
      s2.add(v * v);
    }
    const double count = static_cast<double>(P);
    const double mean = s1.value() / count;
    const double var = std::max(0.0, (s2.value() - count * mean * mean) / (count - 1.0));
    return MseEstimate{mean, std::sqrt(var / count)};
  };

  MseGridEstimate out;
  out.pointwise.reserve(T);
  for (std::size_t a = 0; a < T; ++a) out.pointwise.push_back(summarize([&](std::size_t p) { return sq[p * T + a]; }));
  out.averaged = summarize([&](std::size_t p) {
    CompensatedSum s;
    for (std::size_t a = 0; a < T; ++a) s.add(sq[p * T + a]);
    return s.value() / static_cast<double>(T);
  });
  return out;
}

MseEstimate mse_estimate(const Kernel2D& k, const Density2D& d2, const KSnnoConfig& cfg, double t) {
  const KantorovichOperator op(k, d2, cfg.n, cfg.quadrature);
  const double ts[] = {t};
  return mse_estimate_grid(op, cfg, ts).pointwise.front();
}

IsometryGap make_isometry_gap(const MseEstimate& mc, double oracle, double tolerance) {
  constexpr double kNegligible = 1e-20;
  IsometryGap g;
  g.mse = mc.mse;
  g.standard_error = mc.standard_error;
  g.oracle = oracle;
  if (oracle <= kNegligible) {
    if (mc.mse <= kNegligible) {
      g.applicable = false;
      g.gap = 0.0;
      g.pass = true;
    } else {
      g.gap = std::numeric_limits<double>::infinity();
      g.pass = false;
    }
    return g;
  }
  g.gap = std::abs(mc.mse - oracle) / oracle;
  g.pass = g.gap <= tolerance;
  return g;
}

IsometryGap isometry_gap(const Kernel2D& k, const Density2D& d2, const KSnnoConfig& cfg, double t,
                         double tolerance) {
  const KantorovichOperator op(k, d2, cfg.n, cfg.quadrature);
  const double ts[] = {t};
  const MseEstimate mc = mse_estimate_grid(op, cfg, ts).pointwise.front();
  return make_isometry_gap(mc, l2_error_pointwise(op, t, cfg.l2), tolerance);
}

}  // namespace ksnno
