#pragma once

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ksnno {

enum class ActivationKind { Logistic, Custom };

// A sigmoidal activation together with the metadata the operators need:
// the decay exponent gamma of |sigma(-t)| = O(|t|^{-1-gamma}) and the
// half-width J beyond which lattice sums of the density are cut off.
class Activation {
 public:
  static constexpr double kDefaultGamma = 5.0;
  static constexpr int kDefaultTruncationWindow = 40;

  static Activation logistic(double gamma = kDefaultGamma,
                             int truncation_window = kDefaultTruncationWindow);

  // Arbitrary user sigmoidal; the density is evaluated with the direct
  // difference formula since oddness is not assumed.
  static Activation custom(std::string name, std::function<double(double)> fn,
                           double gamma = kDefaultGamma,
                           int truncation_window = kDefaultTruncationWindow);

  // Throws std::invalid_argument for an unknown name.
  static Activation from_name(std::string_view name, double gamma = kDefaultGamma,
                              int truncation_window = kDefaultTruncationWindow);

  // sigma(t). Throws std::domain_error on non-finite t.
  double operator()(double t) const;

  ActivationKind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  double gamma() const { return gamma_; }
  int truncation_window() const { return truncation_window_; }

 private:
  Activation(ActivationKind kind, std::string name, std::function<double(double)> fn,
             double gamma, int truncation_window);

  ActivationKind kind_;
  std::string name_;
  std::function<double(double)> fn_;
  double gamma_;
  int truncation_window_;
};

// L(t) = (sigma(t+1) - sigma(t-1)) / 2.
class Density1D {
 public:
  explicit Density1D(Activation activation) : activation_(std::move(activation)) {}

  double operator()(double t) const;

  const Activation& activation() const { return activation_; }

 private:
  Activation activation_;
};

// Phi(t, s) = L(t) L(s).
class Density2D {
 public:
  explicit Density2D(Density1D density) : density_(std::move(density)) {}

  double operator()(double t, double s) const { return density_(t) * density_(s); }

  const Density1D& density() const { return density_; }

 private:
  Density1D density_;
};

// Sum of L(t - j) over |j - round(t)| <= J. Throws std::invalid_argument if J < 2.
double partition_sum(const Density1D& d, double t);

// Sum of L(nt - j) for j = ceil(nc) .. floor(n d_end) - 1.
// Throws std::domain_error when the index range is empty or t lies outside [c, d_end].
double compact_partition_sum(const Density1D& d, double t, int n, double c, double d_end);

// max over the grid of sum_j L(t - j) |t - j|^beta, truncated at the window.
double discrete_moment(const Density1D& d, double beta, std::span<const double> t_grid);

// (integral of L(s)^2 over [c, d_end])^{1/2} by composite Gauss-Legendre.
double density_l2_norm(const Density1D& d, double c, double d_end, int panels = 64,
                       int order = 8);

struct SigmoidalReport {
  std::string activation;
  double tolerance = 0.0;
  double gamma = 0.0;

  bool oddness_ok = false;       // |sigma(t) + sigma(-t) - 1| <= tol
  double max_oddness_residual = 0.0;

  bool concavity_ok = false;     // second differences <= slack on t >= 0
  double max_second_difference = 0.0;

  bool decay_ok = false;         // |sigma(-t)| t^{1+gamma} bounded
  std::vector<double> decay_sups;  // sup over [1, T] for each T in the growing grid

  bool sigma_at_one_below_one = false;
  double sigma_at_zero = 0.0;
  double sigma_at_one = 0.0;

  bool all_passed() const { return oddness_ok && concavity_ok && decay_ok && sigma_at_one_below_one; }
};

SigmoidalReport verify_sigmoidal_conditions(const Activation& a, double tol);

std::string to_json(const SigmoidalReport& report);

}  // namespace ksnno
