#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ksnno {

struct Interval {
  double lo = 0.0;
  double hi = 1.0;

  double length() const { return hi - lo; }
  bool contains(double x, double slack = 1e-12) const { return x >= lo - slack && x <= hi + slack; }
};

// Deterministic kernel zeta(t, s) on [lo, hi]^2 driving X_t = int zeta(t, s) dW_s.
struct Kernel2D {
  std::string name;
  std::function<double(double, double)> eval;
  Interval domain;
  // Lip_2(u) class tag, 0 < u <= 1.
  double u = 1.0;
  // Optional closed form of n^2 times the integral of zeta over [j/n,(j+1)/n]^2.
  std::function<double(long j, long n)> exact_cell_average;

  double operator()(double t, double s) const { return eval(t, s); }
};

// One monomial coef * t^p * s^q.
struct Monomial {
  double coef = 0.0;
  int p = 0;
  int q = 0;
};

// zeta(t, s) = t^2 s on [0, 1]^2.
Kernel2D example_kernel();

Kernel2D constant_kernel(double value, Interval domain = {});

// Sum of monomials, with the exact cell integral attached.
Kernel2D polynomial_kernel(std::vector<Monomial> terms, Interval domain = {});

// alpha * a + beta * b on the common domain; keeps an exact cell average
// only when both operands have one.
Kernel2D linear_combination(double alpha, const Kernel2D& a, double beta, const Kernel2D& b);

// Parses "example-t2s", "const:<c>" or "poly:<c>*t^<p>*s^<q>+...".
// Throws std::invalid_argument on malformed input.
Kernel2D kernel_from_spec(std::string_view spec, Interval domain = {});

}  // namespace ksnno
