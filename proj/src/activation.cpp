#include "ksnno/activation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "json.hpp"
#include "ksnno/quadrature.hpp"

namespace ksnno {
namespace {

double logistic_eval(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

void require_finite(double t, const char* what) {
  if (!std::isfinite(t)) throw std::domain_error(fmt::format("{}: non-finite argument", what));
}

}  // namespace

Activation::Activation(ActivationKind kind, std::string name, std::function<double(double)> fn,
                       double gamma, int truncation_window)
    : kind_(kind),
      name_(std::move(name)),
      fn_(std::move(fn)),
      gamma_(gamma),
      truncation_window_(truncation_window) {
  if (!(gamma_ > 0.0)) throw std::invalid_argument("activation: gamma must be positive");
  if (truncation_window_ < 1) throw std::invalid_argument("activation: truncation window must be positive");
}

Activation Activation::logistic(double gamma, int truncation_window) {
  return Activation(ActivationKind::Logistic, "logistic", logistic_eval, gamma, truncation_window);
}

Activation Activation::custom(std::string name, std::function<double(double)> fn, double gamma,
                              int truncation_window) {
  if (!fn) throw std::invalid_argument("activation: empty function");
  return Activation(ActivationKind::Custom, std::move(name), std::move(fn), gamma, truncation_window);
}

Activation Activation::from_name(std::string_view name, double gamma, int truncation_window) {
  if (name == "logistic") return logistic(gamma, truncation_window);
  throw std::invalid_argument(fmt::format("unknown activation '{}'", name));
}

double Activation::operator()(double t) const {
  require_finite(t, "sigmoid_eval");
  return fn_(t);
}

double Density1D::operator()(double t) const {
  require_finite(t, "density_eval");
  const Activation& a = activation_;
  if (a.kind() == ActivationKind::Logistic) {
    // Evaluate on the left tail: sigma(x+1) - sigma(x-1) cancels for large x.
    const double x = -std::abs(t);
    return 0.5 * (a(x + 1.0) - a(x - 1.0));
  }
  return 0.5 * (a(t + 1.0) - a(t - 1.0));
}

double partition_sum(const Density1D& d, double t) {
  const int window = d.activation().truncation_window();
  if (window < 2) throw std::invalid_argument("partition_sum: truncation window must be >= 2");
  const double centre = std::round(t);
  double sum = 0.0;
  // Outermost terms first so the small tails are not absorbed.
  for (int k = window; k >= 1; --k) {
    sum += d(t - (centre + k));
    sum += d(t - (centre - k));
  }
  return sum + d(t - centre);
}

double compact_partition_sum(const Density1D& d, double t, int n, double c, double d_end) {
  if (n < 1) throw std::domain_error("compact_partition_sum: n must be positive");
  if (t < c || t > d_end) throw std::domain_error("compact_partition_sum: t outside [c, d]");
  const long lo = static_cast<long>(std::ceil(n * c));
  const long hi = static_cast<long>(std::floor(n * d_end)) - 1;
  if (lo > hi) {
    throw std::domain_error(fmt::format("compact_partition_sum: empty index range {}..{}", lo, hi));
  }
  double sum = 0.0;
  for (long j = lo; j <= hi; ++j) sum += d(n * t - static_cast<double>(j));
  return sum;
}

double discrete_moment(const Density1D& d, double beta, std::span<const double> t_grid) {
  if (beta < 0.0) throw std::domain_error("discrete_moment: beta must be non-negative");
  if (t_grid.empty()) throw std::domain_error("discrete_moment: empty grid");
  const int window = d.activation().truncation_window();
  double best = 0.0;
  for (double t : t_grid) {
    const double centre = std::round(t);
    double sum = 0.0;
    for (int k = window; k >= -window; --k) {
      const double x = t - (centre + k);
      sum += d(x) * std::pow(std::abs(x), beta);
    }
    best = std::max(best, sum);
  }
  return best;
}

double density_l2_norm(const Density1D& d, double c, double d_end, int panels, int order) {
  if (c > d_end) throw std::domain_error("density_l2_norm: empty interval");
  if (c == d_end) return 0.0;
  const QuadratureRule rule = composite_gauss_legendre(c, d_end, panels, order);
  const double sq = rule.integrate([&](double s) {
    const double v = d(s);
    return v * v;
  });
  return std::sqrt(sq);
}

SigmoidalReport verify_sigmoidal_conditions(const Activation& a, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("verify_sigmoidal_conditions: tol must be positive");
  constexpr double kRange = 30.0;
  constexpr double kGridStep = 0.01;
  constexpr double kDiffStep = 1e-3;
  constexpr double kConcavitySlack = 1e-9;

  SigmoidalReport r;
  r.activation = a.name();
  r.tolerance = tol;
  r.gamma = a.gamma();

  const int steps = static_cast<int>(kRange / kGridStep);
  for (int i = 0; i <= steps; ++i) {
    const double t = i * kGridStep;
    r.max_oddness_residual = std::max(r.max_oddness_residual, std::abs(a(t) + a(-t) - 1.0));
    if (t >= kDiffStep) {
      const double second = a(t + kDiffStep) - 2.0 * a(t) + a(t - kDiffStep);
      r.max_second_difference = std::max(r.max_second_difference, second);
    }
  }
  r.oddness_ok = r.max_oddness_residual <= tol;
  r.concavity_ok = r.max_second_difference <= kConcavitySlack;

  // Decay: the sup of |sigma(-t)| t^{1+gamma} over [1, T] must level off as
  // T doubles. A tail that is only O(t^{-1-gamma+p}) for some p > 0 makes each
  // doubling multiply the sup by about 2^p.
  constexpr double kDoublingGrowthLimit = 1.1;
  const double exponent = 1.0 + a.gamma();
  double running = 0.0;
  double t = 1.0;
  for (double horizon : {10.0, 20.0, 40.0, 80.0}) {
    for (; t <= horizon + 1e-12; t += kGridStep) running = std::max(running, std::abs(a(-t)) * std::pow(t, exponent));
    r.decay_sups.push_back(running);
  }
  r.decay_ok = std::isfinite(r.decay_sups.back());
  for (std::size_t i = 1; i < r.decay_sups.size(); ++i) {
    r.decay_ok = r.decay_ok && r.decay_sups[i] <= kDoublingGrowthLimit * r.decay_sups[i - 1];
  }

  r.sigma_at_zero = a(0.0);
  r.sigma_at_one = a(1.0);
  r.sigma_at_one_below_one = r.sigma_at_one < 1.0;
  return r;
}

std::string to_json(const SigmoidalReport& r) {
  nlohmann::ordered_json j;
  j["activation"] = r.activation;
  j["tolerance"] = r.tolerance;
  j["gamma"] = r.gamma;
  j["oddness"] = {{"pass", r.oddness_ok}, {"max_residual", r.max_oddness_residual}};
  j["concavity"] = {{"pass", r.concavity_ok}, {"max_second_difference", r.max_second_difference}};
  j["decay"] = {{"pass", r.decay_ok}, {"sups", r.decay_sups}};
  j["sigma_at_zero"] = r.sigma_at_zero;
  j["sigma_at_one"] = r.sigma_at_one;
  j["sigma_at_one_below_one"] = r.sigma_at_one_below_one;
  j["all_passed"] = r.all_passed();
  return j.dump(2) + "\n";
}

}  // namespace ksnno
