#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ksnno/activation.hpp"
#include "ksnno/kernel.hpp"

namespace ksnno {

// Counter-based generator: output k of a stream is splitmix64(key + k * golden).
// Streams are addressed by (master seed, path index) alone, so any path can be
// regenerated independently of how many others were drawn before it.
class SubstreamRng {
 public:
  SubstreamRng(std::uint64_t master_seed, std::uint64_t path_index);

  std::uint64_t next_u64();
  // Uniform on (0, 1), never exactly 0 or 1.
  double next_uniform();
  // Standard normal via Box-Muller; pairs are cached.
  double next_normal();

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

// Discretely sampled Wiener process on a (usually uniform) time grid.
struct WienerPath {
  std::vector<double> times;       // s_0 < ... < s_m
  std::vector<double> increments;  // W(s_{k+1}) - W(s_k), k = 0..m-1
  std::vector<double> values;      // W(s_k), values[0] = 0
  std::uint64_t seed = 0;
  std::uint64_t path_index = 0;

  std::size_t steps() const { return increments.size(); }
  Interval interval() const { return {times.front(), times.back()}; }
};

// Throws std::domain_error if m < 2 or the interval is empty.
WienerPath generate_wiener_path(std::uint64_t seed, std::uint64_t path_index, int m, Interval interval);

// Builds a path from given grid times and per-step increments.
WienerPath path_from_increments(std::vector<double> times, std::vector<double> increments);

// Left-endpoint Ito sum: sum_k f(s_k) dW_k.
double ito_integral(const std::function<double(double)>& f, const WienerPath& path);
// Same with f already evaluated at s_0..s_{m-1}.
double ito_integral(std::span<const double> integrand, const WienerPath& path);

// X_t = int zeta(t, s) dW_s.
double sample_process(const Kernel2D& k, const WienerPath& path, double t);

enum class TimeRule { Left, Right, Trapezoid };

TimeRule time_rule_from_name(const std::string& name);
std::string to_string(TimeRule rule);

// Quadrature of the recorded W over the path grid.
double path_time_integral(const WienerPath& path, TimeRule rule);

// phi_{j,n}(t) = int Phi(nt-j, ns-j) / sum_j' Phi(nt-j', ns-j') dW_s over the path interval.
double stochastic_neuron(const Density2D& d2, int n, long j, double t, const WienerPath& path);

// All neurons for j in the compact index range, in index order.
std::vector<double> stochastic_neurons(const Density2D& d2, int n, double t, const WienerPath& path);

struct NeuronMomentReport {
  int n = 0;
  long j = 0;
  double t = 0.0;
  int paths = 0;
  int steps = 0;
  double mean = 0.0;
  double mean_se = 0.0;
  double second_moment = 0.0;
  double second_moment_se = 0.0;
  // Isometry value: integral of the squared normalized weight.
  double quadrature_moment = 0.0;
  // ||L||_2^2 L(nt-j)^2 / (n^2 L(2)^4), read as an upper bound.
  double bound = 0.0;
  bool within_bound = false;  // second_moment <= bound + 3 se
};

// Throws std::invalid_argument if paths < 100. m = 0 selects max(2000, 50 n).
NeuronMomentReport neuron_second_moment_check(const Density2D& d2, int n, long j, double t, int paths,
                                              std::uint64_t seed, Interval interval = {}, int m = 0,
                                              int workers = 1);

int default_path_steps(int n);

class FixtureParseError : public std::runtime_error {
 public:
  FixtureParseError(const std::string& what, std::size_t row)
      : std::runtime_error(what), row_(row) {}
  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

// Increments recorded on a time grid, read from a "t,dW" CSV.
struct IncrementFixture {
  std::vector<double> times;
  std::vector<double> dW;  // dW[i] = W(t_i) - W(t_{i-1}); dW[0] is the value at t_0
  std::string provenance;

  WienerPath to_path() const;
};

IncrementFixture parse_fixture(std::istream& in, std::string provenance);
IncrementFixture load_fixture(const std::string& path);

}  // namespace ksnno
