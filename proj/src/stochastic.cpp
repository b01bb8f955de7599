#include "ksnno/stochastic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <sstream>

#include <fmt/format.h>

#include "ksnno/kantorovich.hpp"
#include "ksnno/parallel.hpp"
#include "ksnno/quadrature.hpp"

namespace ksnno {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

SubstreamRng::SubstreamRng(std::uint64_t master_seed, std::uint64_t path_index)
    : key_(splitmix64(splitmix64(master_seed) ^ splitmix64(path_index + 0xA0761D6478BD642FULL))) {}

std::uint64_t SubstreamRng::next_u64() {
  return splitmix64(key_ + 0x9E3779B97F4A7C15ULL * counter_++);
}

double SubstreamRng::next_uniform() {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double SubstreamRng::next_normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  const double u1 = next_uniform();
  const double u2 = next_uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  have_spare_ = true;
  return radius * std::cos(angle);
}

int default_path_steps(int n) { return std::max(2000, 50 * n); }

WienerPath generate_wiener_path(std::uint64_t seed, std::uint64_t path_index, int m, Interval interval) {
  if (m < 2) throw std::domain_error(fmt::format("wiener path needs m >= 2, got {}", m));
  if (!(interval.hi > interval.lo)) throw std::domain_error("wiener path needs a non-empty interval");
  WienerPath path;
  path.seed = seed;
  path.path_index = path_index;
  path.times.resize(m + 1);
  path.increments.resize(m);
  path.values.resize(m + 1);
  const double dt = interval.length() / m;
  const double scale = std::sqrt(dt);
  for (int k = 0; k <= m; ++k) path.times[k] = interval.lo + k * dt;
  path.times.back() = interval.hi;
  SubstreamRng rng(seed, path_index);
  path.values[0] = 0.0;
  for (int k = 0; k < m; ++k) {
    path.increments[k] = scale * rng.next_normal();
    path.values[k + 1] = path.values[k] + path.increments[k];
  }
  return path;
}

WienerPath path_from_increments(std::vector<double> times, std::vector<double> increments) {
  if (times.size() != increments.size() + 1 || increments.empty()) {
    throw std::invalid_argument("path_from_increments: need one more time than increments");
  }
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) throw std::invalid_argument("path_from_increments: times must increase");
  }
  WienerPath path;
  path.times = std::move(times);
  path.increments = std::move(increments);
  path.values.resize(path.times.size());
  path.values[0] = 0.0;
  for (std::size_t k = 0; k < path.increments.size(); ++k) {
    path.values[k + 1] = path.values[k] + path.increments[k];
  }
  return path;
}

double ito_integral(const std::function<double(double)>& f, const WienerPath& path) {
  double acc = 0.0;
  for (std::size_t k = 0; k < path.increments.size(); ++k) acc += f(path.times[k]) * path.increments[k];
  return acc;
}

double ito_integral(std::span<const double> integrand, const WienerPath& path) {
  if (integrand.size() != path.increments.size()) {
    throw std::invalid_argument("ito_integral: integrand size does not match the path");
  }
  double acc = 0.0;
  for (std::size_t k = 0; k < integrand.size(); ++k) acc += integrand[k] * path.increments[k];
  return acc;
}

double sample_process(const Kernel2D& k, const WienerPath& path, double t) {
  if (!k.domain.contains(t)) throw std::domain_error("sample_process: t outside the kernel domain");
  return ito_integral([&](double s) { return k(t, s); }, path);
}

TimeRule time_rule_from_name(const std::string& name) {
  if (name == "left") return TimeRule::Left;
  if (name == "right") return TimeRule::Right;
  if (name == "trapezoid") return TimeRule::Trapezoid;
  throw std::invalid_argument(fmt::format("unknown time rule '{}'", name));
}

std::string to_string(TimeRule rule) {
  switch (rule) {
    case TimeRule::Left: return "left";
    case TimeRule::Right: return "right";
    case TimeRule::Trapezoid: return "trapezoid";
  }
  return "unknown";
}

double path_time_integral(const WienerPath& path, TimeRule rule) {
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < path.times.size(); ++k) {
    const double h = path.times[k + 1] - path.times[k];
    switch (rule) {
      case TimeRule::Left: acc += h * path.values[k]; break;
      case TimeRule::Right: acc += h * path.values[k + 1]; break;
      case TimeRule::Trapezoid: acc += 0.5 * h * (path.values[k] + path.values[k + 1]); break;
    }
  }
  return acc;
}

namespace {

// Normalized weight of neuron j at every left endpoint of the path grid.
std::vector<double> neuron_integrand(const Density2D& d2, int n, long j, double t, const WienerPath& path) {
  const Interval domain = path.interval();
  const IndexRange range = index_range(n, domain);
  if (j < range.first || j > range.last) {
    throw std::domain_error(fmt::format("neuron index {} outside {}..{}", j, range.first, range.last));
  }
  if (!domain.contains(t)) throw std::domain_error("stochastic_neuron: t outside the path interval");
  const Density1D& d = d2.density();
  std::vector<double> tf(range.size());
  for (long i = 0; i < range.size(); ++i) tf[i] = d(n * t - static_cast<double>(range.first + i));
  std::vector<double> out(path.steps());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double ns = n * path.times[k];
    double den = 0.0;
    double own = 0.0;
    for (long i = 0; i < range.size(); ++i) {
      const long jj = range.first + i;
      const double w = tf[i] * d(ns - static_cast<double>(jj));
      den += w;
      if (jj == j) own = w;
    }
    if (!(den >= kDenominatorGuard)) {
      throw NumericalDegeneracyError(fmt::format("neuron normalizing sum {} below guard at s = {}", den,
                                                 path.times[k]));
    }
    out[k] = own / den;
  }
  return out;
}

}  // namespace

double stochastic_neuron(const Density2D& d2, int n, long j, double t, const WienerPath& path) {
  return ito_integral(neuron_integrand(d2, n, j, t, path), path);
}

std::vector<double> stochastic_neurons(const Density2D& d2, int n, double t, const WienerPath& path) {
  const Interval domain = path.interval();
  const IndexRange range = index_range(n, domain);
  if (!domain.contains(t)) throw std::domain_error("stochastic_neurons: t outside the path interval");
  const Density1D& d = d2.density();
  std::vector<double> tf(range.size());
  for (long i = 0; i < range.size(); ++i) tf[i] = d(n * t - static_cast<double>(range.first + i));
  std::vector<double> phi(range.size(), 0.0);
  std::vector<double> w(range.size());
  for (std::size_t k = 0; k < path.steps(); ++k) {
    const double ns = n * path.times[k];
    double den = 0.0;
    for (long i = 0; i < range.size(); ++i) {
      w[i] = tf[i] * d(ns - static_cast<double>(range.first + i));
      den += w[i];
    }
    if (!(den >= kDenominatorGuard)) {
      throw NumericalDegeneracyError(fmt::format("neuron normalizing sum {} below guard at s = {}", den,
                                                 path.times[k]));
    }
    const double dw = path.increments[k] / den;
    for (long i = 0; i < range.size(); ++i) phi[i] += w[i] * dw;
  }
  return phi;
}

NeuronMomentReport neuron_second_moment_check(const Density2D& d2, int n, long j, double t, int paths,
                                              std::uint64_t seed, Interval interval, int m, int workers) {
  if (paths < 100) throw std::invalid_argument("neuron_second_moment_check: need at least 100 paths");
  const int steps = m > 0 ? m : default_path_steps(n);

  // The integrand depends only on the grid, which every path shares.
  const WienerPath grid = generate_wiener_path(seed, 0, steps, interval);
  const std::vector<double> h = neuron_integrand(d2, n, j, t, grid);

  std::vector<double> values(paths);
  parallel_for(static_cast<std::size_t>(paths), workers, [&](std::size_t p) {
    const WienerPath path = generate_wiener_path(seed, p, steps, interval);
    values[p] = ito_integral(h, path);
  });

  CompensatedSum s1, s2, s4;
  for (double v : values) {
    s1.add(v);
    s2.add(v * v);
    s4.add(v * v * v * v);
  }
  const double count = paths;
  NeuronMomentReport r;
  r.n = n;
  r.j = j;
  r.t = t;
  r.paths = paths;
  r.steps = steps;
  r.mean = s1.value() / count;
  r.second_moment = s2.value() / count;
  r.mean_se = std::sqrt(std::max(0.0, r.second_moment - r.mean * r.mean) / (count - 1.0));
  r.second_moment_se =
      std::sqrt(std::max(0.0, s4.value() / count - r.second_moment * r.second_moment) / (count - 1.0));

  // Isometry value of the same weight, integrated accurately in s.
  const KantorovichOperator op(constant_kernel(0.0, interval), d2, n);
  const IndexRange range = op.range();
  std::vector<double> w(range.size());
  const QuadratureRule rule = composite_gauss_legendre(interval.lo, interval.hi, 64, 8);
  r.quadrature_moment = rule.integrate([&](double s) {
    op.normalized_weights(t, s, w);
    const double v = w[j - range.first];
    return v * v;
  });

  const Density1D& d = d2.density();
  const double window = d.activation().truncation_window();
  const double norm = density_l2_norm(d, -window, window, 128, 8);
  const double l2 = d(2.0);
  const double local = d(n * t - static_cast<double>(j));
  r.bound = norm * norm * local * local / (static_cast<double>(n) * n * l2 * l2 * l2 * l2);
  r.within_bound = r.second_moment <= r.bound + 3.0 * r.second_moment_se;
  return r;
}

WienerPath IncrementFixture::to_path() const {
  if (times.size() < 2) throw std::invalid_argument("fixture: need at least two rows");
  if (dW.front() != 0.0) throw std::invalid_argument("fixture: first increment must be zero");
  return path_from_increments(times, std::vector<double>(dW.begin() + 1, dW.end()));
}

IncrementFixture parse_fixture(std::istream& in, std::string provenance) {
  IncrementFixture fx;
  fx.provenance = std::move(provenance);
  std::string line;
  std::size_t row = 0;
  auto strip = [](std::string& s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
  };
  if (!std::getline(in, line)) throw FixtureParseError("fixture: empty input", 1);
  ++row;
  strip(line);
  if (line != "t,dW") throw FixtureParseError(fmt::format("fixture row 1: expected header 't,dW', got '{}'", line), 1);
  while (std::getline(in, line)) {
    ++row;
    strip(line);
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
      throw FixtureParseError(fmt::format("fixture row {}: expected two fields", row), row);
    }
    double t = 0.0, dw = 0.0;
    try {
      std::size_t used = 0;
      const std::string a = line.substr(0, comma);
      const std::string b = line.substr(comma + 1);
      t = std::stod(a, &used);
      if (used != a.size()) throw std::invalid_argument("trailing");
      dw = std::stod(b, &used);
      if (used != b.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw FixtureParseError(fmt::format("fixture row {}: malformed number in '{}'", row, line), row);
    }
    if (!std::isfinite(t) || !std::isfinite(dw)) {
      throw FixtureParseError(fmt::format("fixture row {}: non-finite value", row), row);
    }
    if (!fx.times.empty() && !(t > fx.times.back())) {
      throw FixtureParseError(fmt::format("fixture row {}: times must be strictly increasing", row), row);
    }
    fx.times.push_back(t);
    fx.dW.push_back(dw);
  }
  if (fx.times.empty()) throw FixtureParseError("fixture: no data rows", row);
  return fx;
}

IncrementFixture load_fixture(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(fmt::format("cannot open fixture '{}'", path));
  return parse_fixture(in, path);
}

}  // namespace ksnno
