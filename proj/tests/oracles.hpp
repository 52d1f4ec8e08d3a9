#pragma once

// Reference computations used only by the tests. They are deliberately slow and simple and
// share no code with the library.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace oracle
{

using cd = std::complex<double>;

// Number of eigenvalues of a Hermitian H below sigma, from the signs of the LDL^H pivots of
// H - sigma I (Sylvester inertia).
inline int count_below(const Eigen::MatrixXcd &H, double sigma)
{
  const auto n = H.rows();
  Eigen::MatrixXcd A = H - sigma * Eigen::MatrixXcd::Identity(n, n);
  int negative = 0;
  for (Eigen::Index k = 0; k < n; k++)
  {
    double d = A(k, k).real();
    if (d == 0.0)
    {
      d = -1e-300;
    }
    if (d < 0.0)
    {
      negative++;
    }
    for (Eigen::Index i = k + 1; i < n; i++)
    {
      const cd l = A(i, k) / d;
      for (Eigen::Index j = k + 1; j < n; j++)
      {
        A(i, j) -= l * std::conj(A(j, k));
      }
    }
  }
  return negative;
}

// Ascending eigenvalues of a Hermitian matrix by bisection on the inertia count.
inline std::vector<double> hermitian_eigenvalues(const Eigen::MatrixXcd &H, double tol = 1e-13)
{
  const auto n = static_cast<int>(H.rows());
  double r = 0.0;
  for (int i = 0; i < n; i++)
  {
    r = std::max(r, H.row(i).cwiseAbs().sum());
  }
  r += 1.0;
  std::vector<double> out;
  for (int k = 0; k < n; k++)
  {
    double lo = -r;
    double hi = r;
    while (hi - lo > tol * r)
    {
      const double mid = 0.5 * (lo + hi);
      if (count_below(H, mid) > k)
      {
        hi = mid;
      }
      else
      {
        lo = mid;
      }
    }
    out.push_back(0.5 * (lo + hi));
  }
  return out;
}

// Monic probabilists' Hermite polynomial from its explicit sum, in long double.
inline long double hermite_sum(int k, long double x)
{
  long double total = 0.0L;
  for (int m = 0; 2 * m <= k; m++)
  {
    const long double term = std::pow(x, k - 2 * m) / (std::tgamma(static_cast<long double>(m + 1)) *
                                                       std::tgamma(static_cast<long double>(k - 2 * m + 1)) *
                                                       std::pow(2.0L, m));
    total += (m % 2 == 0 ? term : -term);
  }
  return total * std::tgamma(static_cast<long double>(k + 1));
}

// Orthonormal Hermite function with weight e^{-x^2/2}, factorial form.
inline double hermite_function(int k, double x)
{
  const long double pi = 3.141592653589793238462643383279502884L;
  const long double norm = std::sqrt(std::sqrt(2.0L * pi) * std::tgamma(static_cast<long double>(k + 1)));
  const long double xl = x;
  return static_cast<double>(hermite_sum(k, xl) * std::exp(-xl * xl / 4.0L) / norm);
}

// Largest distance under a greedy nearest-neighbour matching of two equal-size multisets;
// returns +inf on a size mismatch.
inline double multiset_distance(std::vector<cd> a, std::vector<cd> b)
{
  if (a.size() != b.size())
  {
    return std::numeric_limits<double>::infinity();
  }
  double worst = 0.0;
  std::vector<bool> used(b.size(), false);
  for (const cd &x : a)
  {
    double best = std::numeric_limits<double>::infinity();
    std::size_t at = 0;
    for (std::size_t j = 0; j < b.size(); j++)
    {
      if (!used[j] && std::abs(x - b[j]) < best)
      {
        best = std::abs(x - b[j]);
        at = j;
      }
    }
    used[at] = true;
    worst = std::max(worst, best);
  }
  return worst;
}

// Composite Simpson rule, independent of the library quadrature.
template <typename F>
double simpson(F f, double a, double b, int intervals)
{
  if (intervals % 2 == 1)
  {
    intervals++;
  }
  const double h = (b - a) / intervals;
  double s = f(a) + f(b);
  for (int i = 1; i < intervals; i++)
  {
    s += (i % 2 == 1 ? 4.0 : 2.0) * f(a + i * h);
  }
  return s * h / 3.0;
}

}  // namespace oracle
