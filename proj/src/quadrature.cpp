#include "rmt/quadrature.hpp"

#include <cmath>
#include <numbers>

#include "rmt/errors.hpp"

namespace rmt
{

QuadratureRule gauss_legendre(int n)
{
  if (n < 1)
  {
    throw InvalidInput("gauss_legendre: order must be positive");
  }
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; i++)
  {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; it++)
    {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; k++)
      {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1)
      {
        p1 = x;
        p0 = 1.0;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16)
      {
        break;
      }
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

double integrate_panels(const std::function<double(double)> &f, double a, double b, int panels, int order)
{
  if (panels < 1)
  {
    throw InvalidInput("integrate_panels: need at least one panel");
  }
  const QuadratureRule rule = gauss_legendre(order);
  const double h = (b - a) / panels;
  double total = 0.0;
  for (int p = 0; p < panels; p++)
  {
    const double mid = a + (p + 0.5) * h;
    double s = 0.0;
    for (std::size_t k = 0; k < rule.nodes.size(); k++)
    {
      s += rule.weights[k] * f(mid + 0.5 * h * rule.nodes[k]);
    }
    total += 0.5 * h * s;
  }
  return total;
}

}  // namespace rmt
