#pragma once

#include <vector>

namespace ksnno {

// Nodes and weights of a quadrature rule on some interval.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  template <typename F>
  double integrate(F&& f) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) acc += weights[i] * f(nodes[i]);
    return acc;
  }
};

// Gauss-Legendre rule of the given order on [-1, 1] (Newton on P_order).
QuadratureRule gauss_legendre(int order);

// Composite Gauss-Legendre rule on [a, b] with equal panels.
QuadratureRule composite_gauss_legendre(double a, double b, int panels, int order);

}  // namespace ksnno
