#pragma once

#include <functional>
#include <vector>

namespace rmt
{

struct QuadratureRule
{
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};

// n-point Gauss-Legendre rule; nodes from Newton iteration on P_n.
QuadratureRule gauss_legendre(int n);

// Composite Gauss-Legendre: `panels` equal panels on [a, b], `order` nodes each.
double integrate_panels(const std::function<double(double)> &f, double a, double b, int panels, int order);

}  // namespace rmt
