#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace rmt
{

struct MeanEstimate
{
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t count = 0;
};

MeanEstimate mean_estimate(const std::vector<double> &x);

// Wilson score interval at 95% (z = 1.959963984540054).
struct ProportionEstimate
{
  std::size_t successes = 0;
  std::size_t trials = 0;
  double rate = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  bool defined = false;  // false when trials == 0
};

ProportionEstimate wilson_interval(std::size_t successes, std::size_t trials);

// Empirical quantile with linear interpolation between order statistics (type 7).
double quantile(std::vector<double> x, double q);
double median(std::vector<double> x);

// Kolmogorov-Smirnov distance between the empirical CDF of x and a continuous CDF.
double ks_distance(std::vector<double> x, const std::function<double(double)> &cdf);

struct TwoSampleKs
{
  double distance = 0.0;
  double p_value = 1.0;  // asymptotic Kolmogorov distribution
};

TwoSampleKs ks_two_sample(std::vector<double> a, std::vector<double> b);

// Survival function of the Kolmogorov distribution, P(K > t).
double kolmogorov_survival(double t);

// Upper tail of chi-square with dof degrees of freedom.
double chi_square_survival(double statistic, double dof);

}  // namespace rmt
