#include "rmt/stats.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/chi_squared.hpp>

#include "rmt/errors.hpp"

namespace rmt
{

MeanEstimate mean_estimate(const std::vector<double> &x)
{
  MeanEstimate out;
  out.count = x.size();
  if (x.empty())
  {
    return out;
  }
  double s = 0.0;
  for (double v : x)
  {
    s += v;
  }
  out.mean = s / static_cast<double>(x.size());
  if (x.size() > 1)
  {
    double ss = 0.0;
    for (double v : x)
    {
      ss += (v - out.mean) * (v - out.mean);
    }
    const double var = ss / static_cast<double>(x.size() - 1);
    out.std_error = std::sqrt(var / static_cast<double>(x.size()));
  }
  return out;
}

ProportionEstimate wilson_interval(std::size_t successes, std::size_t trials)
{
  ProportionEstimate out;
  out.successes = successes;
  out.trials = trials;
  if (trials == 0)
  {
    return out;
  }
  constexpr double z = 1.959963984540054;
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double denom = 1.0 + z * z / n;
  const double center = (p + z * z / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom;
  out.rate = p;
  out.lower = std::max(0.0, center - half);
  out.upper = std::min(1.0, center + half);
  out.defined = true;
  return out;
}

double quantile(std::vector<double> x, double q)
{
  if (x.empty())
  {
    throw InvalidInput("quantile: empty sample");
  }
  std::sort(x.begin(), x.end());
  const double h = (static_cast<double>(x.size()) - 1.0) * std::clamp(q, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (h - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

double median(std::vector<double> x) { return quantile(std::move(x), 0.5); }

double ks_distance(std::vector<double> x, const std::function<double(double)> &cdf)
{
  if (x.empty())
  {
    throw InvalidInput("ks_distance: empty sample");
  }
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t k = 0; k < x.size(); k++)
  {
    const double f = cdf(x[k]);
    d = std::max({d, f - static_cast<double>(k) / n, static_cast<double>(k + 1) / n - f});
  }
  return d;
}

double kolmogorov_survival(double t)
{
  if (t <= 0.0)
  {
    return 1.0;
  }
  if (t < 0.2)
  {
    return 1.0;
  }
  double s = 0.0;
  for (int k = 1; k <= 100; k++)
  {
    const double term = std::exp(-2.0 * k * k * t * t);
    s += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-18)
    {
      break;
    }
  }
  return std::clamp(s, 0.0, 1.0);
}

TwoSampleKs ks_two_sample(std::vector<double> a, std::vector<double> b)
{
  if (a.empty() || b.empty())
  {
    throw InvalidInput("ks_two_sample: empty sample");
  }
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size())
  {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x)
    {
      i++;
    }
    while (j < b.size() && b[j] <= x)
    {
      j++;
    }
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double ne = na * nb / (na + nb);
  const double sq = std::sqrt(ne);
  // Stephens' small-sample correction to the asymptotic statistic.
  const double t = (sq + 0.12 + 0.11 / sq) * d;
  return TwoSampleKs{d, kolmogorov_survival(t)};
}

double chi_square_survival(double statistic, double dof)
{
  boost::math::chi_squared dist(dof);
  return boost::math::cdf(boost::math::complement(dist, statistic));
}

}  // namespace rmt
