#include "rmt/gaussian_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "rmt/errors.hpp"
#include "rmt/quadrature.hpp"

namespace rmt
{

namespace
{

void require_odd_N(int N, const char *who)
{
  if (N < 3 || N % 2 == 0)
  {
    throw InvalidInput(std::string(who) + ": N must be odd and at least 3");
  }
}

}  // namespace

double hermite_monic(int k, double x)
{
  if (k < 0)
  {
    throw InvalidInput("hermite_monic: negative order");
  }
  double prev = 1.0;
  if (k == 0)
  {
    return prev;
  }
  double cur = x;
  for (int j = 1; j < k; j++)
  {
    const double next = x * cur - j * prev;
    prev = cur;
    cur = next;
  }
  if (!std::isfinite(cur))
  {
    throw NumericalError("hermite_monic: overflow at order " + std::to_string(k) + "; use the normalized psi instead");
  }
  return cur;
}

Eigen::VectorXd psi_all(int kmax, double x)
{
  if (kmax < 0)
  {
    throw InvalidInput("psi_all: negative order");
  }
  Eigen::VectorXd out(kmax + 1);
  out(0) = std::exp(-0.25 * x * x) / std::pow(2.0 * std::numbers::pi, 0.25);
  if (kmax >= 1)
  {
    out(1) = x * out(0);
  }
  for (int k = 1; k < kmax; k++)
  {
    out(k + 1) = (x * out(k) - std::sqrt(static_cast<double>(k)) * out(k - 1)) / std::sqrt(k + 1.0);
  }
  return out;
}

double psi(int k, double x)
{
  return psi_all(k, x)(k);
}

double kernel_KN(int N, double x, double y)
{
  require_odd_N(N, "kernel_KN");
  const Eigen::VectorXd px = psi_all(N - 2, x);
  const Eigen::VectorXd py = psi_all(N - 2, y);
  double sum = 0.0;
  for (int j = 1; j <= N - 2; j += 2)
  {
    sum += px(j) * py(j);
  }
  return 2.0 * sum;
}

Eigen::MatrixXd kernel_matrix(int N, const std::vector<double> &grid)
{
  require_odd_N(N, "kernel_matrix");
  const auto m = static_cast<Eigen::Index>(grid.size());
  Eigen::MatrixXd P(m, (N - 1) / 2);
  for (Eigen::Index i = 0; i < m; i++)
  {
    const Eigen::VectorXd p = psi_all(N - 2, grid[static_cast<std::size_t>(i)]);
    for (int j = 1, c = 0; j <= N - 2; j += 2, c++)
    {
      P(i, c) = p(j);
    }
  }
  Eigen::MatrixXd K = 2.0 * P * P.transpose();
  // Exact symmetry regardless of the product's rounding.
  return 0.5 * (K + K.transpose());
}

double kernel_diagonal_integral(int N)
{
  require_odd_N(N, "kernel_diagonal_integral");
  const double half = std::max(40.0, std::ceil(2.0 * std::sqrt(static_cast<double>(N)) + 12.0));
  return integrate_panels([N](double x) { return kernel_KN(N, x, x); }, -half, half, static_cast<int>(2 * half), 64);
}

double joint_density_log(int N, const std::vector<double> &lambdas)
{
  require_odd_N(N, "joint_density_log");
  if (lambdas.size() != static_cast<std::size_t>((N - 1) / 2))
  {
    throw InvalidInput("joint_density_log: expected (N - 1) / 2 values");
  }
  const double neg_inf = -std::numeric_limits<double>::infinity();
  double out = 0.0;
  for (std::size_t i = 0; i < lambdas.size(); i++)
  {
    const double li = lambdas[i];
    if (li < 0.0 || !std::isfinite(li))
    {
      throw InvalidInput("joint_density_log: values must be positive and finite");
    }
    if (li == 0.0)
    {
      return neg_inf;
    }
    out += 2.0 * std::log(li) - 0.5 * li * li;
    for (std::size_t j = i + 1; j < lambdas.size(); j++)
    {
      const double d = std::abs(li * li - lambdas[j] * lambdas[j]);
      if (d == 0.0)
      {
        return neg_inf;
      }
      out += 2.0 * std::log(d);
    }
  }
  return out;
}

CorrelationDet correlation_det(int N, const std::vector<double> &points)
{
  require_odd_N(N, "correlation_det");
  const int k = static_cast<int>(points.size());
  if (k < 1 || k > (N - 1) / 2)
  {
    throw InvalidInput("correlation_det: need between 1 and (N - 1) / 2 points");
  }
  CorrelationDet out;
  const Eigen::MatrixXd K = kernel_matrix(N, points);
  out.determinant = K.partialPivLu().determinant();
  out.prefactor = std::exp(std::lgamma(N - k + 1.0) - std::lgamma(N + 1.0));
  return out;
}

double sinc(double x)
{
  if (std::abs(x) < 1e-4)
  {
    const double x2 = x * x;
    return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
  }
  return std::sin(x) / x;
}

SineLimitRecord sine_limit_check(int N, const std::vector<std::pair<double, double>> &points, LimitRegime regime,
                                 double energy)
{
  require_odd_N(N, "sine_limit_check");
  if (regime == LimitRegime::bulk && !(energy > 0.0 && energy < 2.0))
  {
    throw InvalidInput("sine_limit_check: bulk energy must lie in (0, 2)");
  }
  SineLimitRecord rec;
  rec.N = N;
  rec.regime = regime;
  rec.energy = energy;
  rec.points = points;
  const double n = N - 1.0;
  const double root_n = std::sqrt(n);
  const double rho = root_n * std::sqrt(4.0 - energy * energy) / (2.0 * std::numbers::pi);
  for (const auto &[X, Y] : points)
  {
    double value = 0.0;
    double predicted = 0.0;
    double x = 0.0;
    double y = 0.0;
    if (regime == LimitRegime::origin)
    {
      x = X / root_n;
      y = Y / root_n;
      value = std::numbers::pi * kernel_KN(N, x, y) / root_n;
      predicted = sinc(X - Y) - sinc(X + Y);
    }
    else
    {
      x = energy * root_n + X / (std::numbers::pi * rho);
      y = energy * root_n + Y / (std::numbers::pi * rho);
      value = kernel_KN(N, x, y) / rho;
      predicted = sinc(X - Y);
    }
    rec.normalized.push_back(value);
    rec.limit.push_back(predicted);
    rec.abs_difference.push_back(std::abs(value - predicted));
    rec.printed_normalized.push_back(std::numbers::pi * kernel_KN(N, x, y) / std::sqrt(2.0 * n));
    rec.printed_limit.push_back(regime == LimitRegime::origin ? sinc(X - Y) + sinc(X + Y) : sinc(X - Y));
    rec.sup_difference = std::max(rec.sup_difference, rec.abs_difference.back());
    rec.limit_scale = std::max(rec.limit_scale, std::abs(predicted));
  }
  return rec;
}

std::vector<std::pair<double, double>> square_grid(double half_width, int per_side)
{
  std::vector<std::pair<double, double>> out;
  if (per_side < 2)
  {
    out.emplace_back(0.0, 0.0);
    return out;
  }
  for (int i = 0; i < per_side; i++)
  {
    for (int j = 0; j < per_side; j++)
    {
      const double X = -half_width + 2.0 * half_width * i / (per_side - 1);
      const double Y = -half_width + 2.0 * half_width * j / (per_side - 1);
      out.emplace_back(X, Y);
    }
  }
  return out;
}

}  // namespace rmt
