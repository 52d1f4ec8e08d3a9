#include "doctest.h"

#include <cmath>
#include <limits>

#include "oracles.hpp"
#include "rmt/analysis.hpp"
#include "rmt/core_linalg.hpp"
#include "rmt/ensembles.hpp"
#include "rmt/errors.hpp"
#include "rmt/gaussian_model.hpp"
#include "rmt/quadrature.hpp"
#include "rmt/stats.hpp"

using namespace rmt;

TEST_CASE("monic hermite values")
{
  CHECK(hermite_monic(0, 3.0) == 1.0);
  CHECK(hermite_monic(1, 3.0) == 3.0);
  CHECK(hermite_monic(2, 0.0) == -1.0);
  CHECK(hermite_monic(3, 1.0) == -2.0);
  CHECK(hermite_monic(4, 2.0) == doctest::Approx(16.0 - 24.0 + 3.0));
  for (int k : {5, 9, 14})
  {
    CHECK(hermite_monic(k, 0.7) == doctest::Approx(static_cast<double>(oracle::hermite_sum(k, 0.7L))).epsilon(1e-12));
  }
  CHECK_THROWS_AS(hermite_monic(-1, 0.0), InvalidInput);
  CHECK_THROWS_AS(hermite_monic(400, 30.0), NumericalError);
}

TEST_CASE("derivative identity P_k' = k P_{k-1}")
{
  const double h = 1e-5;
  const double fd = (hermite_monic(7, 0.3 + h) - hermite_monic(7, 0.3 - h)) / (2.0 * h);
  CHECK(std::abs(fd - 7.0 * hermite_monic(6, 0.3)) <= 1e-6 * std::abs(7.0 * hermite_monic(6, 0.3)));
}

TEST_CASE("hermite functions")
{
  CHECK(psi(0, 0.0) == doctest::Approx(0.63161878).epsilon(1e-8));
  CHECK(psi(0, 0.0) == doctest::Approx(std::pow(2.0 * M_PI, -0.25)).epsilon(1e-15));
  for (int k : {1, 2, 7, 20, 39})
  {
    for (double x : {-3.1, 0.0, 0.5, 1.0, 6.0})
    {
      CHECK(psi(k, x) == doctest::Approx(oracle::hermite_function(k, x)).epsilon(1e-9).scale(1e-12));
    }
  }
  const Eigen::VectorXd all = psi_all(10, 1.3);
  for (int k = 0; k <= 10; k++)
  {
    CHECK(all(k) == doctest::Approx(psi(k, 1.3)).epsilon(1e-14));
  }
  // normalized recurrence stays finite at high order
  CHECK(std::isfinite(psi(400, 20.0)));
  CHECK(std::isfinite(psi(400, -0.5)));
}

TEST_CASE("orthonormality by quadrature")
{
  for (int k : {1, 3, 5})
  {
    const double norm = integrate_panels([k](double x) { return psi(k, x) * psi(k, x); }, -40.0, 40.0, 80, 64);
    CHECK(std::abs(norm - 1.0) <= 1e-8);
  }
  const double cross = integrate_panels([](double x) { return psi(1, x) * psi(3, x); }, -40.0, 40.0, 80, 64);
  CHECK(std::abs(cross) <= 1e-8);
  // independent rule
  const double simpson = oracle::simpson([](double x) { return psi(4, x) * psi(4, x); }, -20.0, 20.0, 4000);
  CHECK(std::abs(simpson - 1.0) <= 1e-8);
}

TEST_CASE("kernel vanishes on the axis and has the expected symmetries")
{
  for (double x : {-2.0, 0.3, 5.0})
  {
    CHECK(kernel_KN(11, x, 0.0) == 0.0);
  }
  const std::vector<double> grid{-1.5, -0.2, 0.4, 1.1, 2.7};
  for (double x : grid)
  {
    for (double y : grid)
    {
      CHECK(std::abs(kernel_KN(11, x, y) - kernel_KN(11, y, x)) <= 1e-12);
      CHECK(std::abs(kernel_KN(11, x, y) - kernel_KN(11, -x, -y)) <= 1e-12);
    }
  }
  CHECK_THROWS_AS(kernel_KN(10, 0.0, 0.0), InvalidInput);
  CHECK_THROWS_AS(kernel_KN(1, 0.0, 0.0), InvalidInput);
}

TEST_CASE("kernel against the factorial form at N=41")
{
  double ref = 0.0;
  for (int j = 1; j <= 39; j += 2)
  {
    ref += 2.0 * oracle::hermite_function(j, 1.0) * oracle::hermite_function(j, 1.0);
  }
  CHECK(kernel_KN(41, 1.0, 1.0) == doctest::Approx(ref).epsilon(1e-9));
}

TEST_CASE("kernel diagonal integrates to N - 1")
{
  for (int N : {3, 11, 41, 101})
  {
    CHECK(kernel_diagonal_integral(N) == doctest::Approx(N - 1.0).epsilon(1e-6));
  }
}

TEST_CASE("kernel matrices are positive semidefinite")
{
  std::vector<double> grid;
  for (int i = 0; i < 25; i++)
  {
    grid.push_back(-6.0 + 0.5 * i);
  }
  const Eigen::MatrixXd K = kernel_matrix(21, grid);
  CHECK((K - K.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(K).eigenvalues().minCoeff() >= -1e-10);
}

TEST_CASE("joint density")
{
  const double best = joint_density_log(3, {std::sqrt(2.0)});
  CHECK(best == doctest::Approx(std::log(2.0) - 1.0));
  for (double x : {0.5, 1.3, 1.5, 3.0})
  {
    CHECK(joint_density_log(3, {x}) < best);
  }
  CHECK(joint_density_log(5, {1.0, 1.0}) == -std::numeric_limits<double>::infinity());
  CHECK(joint_density_log(5, {0.0, 1.0}) == -std::numeric_limits<double>::infinity());
  const double v = joint_density_log(5, {1.0, 2.0});
  CHECK(v == doctest::Approx(2.0 * std::log(3.0) + 2.0 * std::log(2.0) - 0.5 - 2.0));
  CHECK_THROWS_AS(joint_density_log(5, {1.0}), InvalidInput);
}

TEST_CASE("correlation determinants")
{
  const auto one = correlation_det(11, {0.8});
  CHECK(one.determinant == doctest::Approx(kernel_KN(11, 0.8, 0.8)));
  CHECK(one.determinant >= 0.0);
  CHECK(one.prefactor == doctest::Approx(1.0 / 11.0));
  const auto two = correlation_det(11, {0.8, 2.1});
  const double expect = kernel_KN(11, 0.8, 0.8) * kernel_KN(11, 2.1, 2.1) - std::pow(kernel_KN(11, 0.8, 2.1), 2);
  CHECK(two.determinant == doctest::Approx(expect).epsilon(1e-10));
  CHECK(two.determinant >= 0.0);
  CHECK(two.prefactor == doctest::Approx(1.0 / 110.0));
  CHECK(two.value() == doctest::Approx(two.prefactor * two.determinant));
}

TEST_CASE("two-point determinant vanishes as the points merge")
{
  // det ~ c h^2, so its square root is linear in the separation
  const double x = 1.0;
  std::vector<double> ratio;
  for (double h : {1e-2, 5e-3, 2.5e-3})
  {
    ratio.push_back(std::sqrt(correlation_det(21, {x, x + h}).determinant) / h);
  }
  CHECK(ratio[1] == doctest::Approx(ratio[0]).epsilon(0.02));
  CHECK(ratio[2] == doctest::Approx(ratio[1]).epsilon(0.01));
  CHECK(ratio[2] > 0.1);
}

TEST_CASE("sine-limit records")
{
  CHECK(sinc(0.0) == 1.0);
  CHECK(sinc(M_PI) == doctest::Approx(0.0).scale(1.0));
  const std::vector<std::pair<double, double>> pts{{0.0, 0.0}, {0.7, 0.7}, {0.5, -1.2}, {-0.5, 1.2}, {1.3, 0.4}};
  const auto rec = sine_limit_check(101, pts, LimitRegime::origin);
  REQUIRE(rec.normalized.size() == pts.size());
  // diagonal of the limit: 1 - sin(2X)/(2X); the printed form has the plus sign
  CHECK(rec.limit[1] == doctest::Approx(1.0 - std::sin(1.4) / 1.4));
  CHECK(rec.printed_limit[1] == doctest::Approx(1.0 + std::sin(1.4) / 1.4));
  CHECK(rec.printed_limit[0] == doctest::Approx(2.0));
  // the kernel itself is zero at the origin, as is the corrected limit
  CHECK(rec.normalized[0] == 0.0);
  CHECK(rec.limit[0] == 0.0);
  CHECK(rec.abs_difference[2] == doctest::Approx(rec.abs_difference[3]).epsilon(1e-12));
  CHECK(rec.sup_difference <= 0.1);

  const auto bulk = sine_limit_check(201, {{0.0, 0.0}, {0.3, -0.3}}, LimitRegime::bulk, 1.0);
  CHECK(bulk.limit[0] == 1.0);
  CHECK(std::abs(bulk.normalized[0] - 1.0) <= 0.05);
  CHECK(bulk.limit[1] == doctest::Approx(std::sin(0.6) / 0.6));
  CHECK_THROWS_AS(sine_limit_check(201, pts, LimitRegime::bulk, 2.5), InvalidInput);
}

TEST_CASE("origin sine-limit deviation shrinks with N")
{
  const auto pts = square_grid(2.0, 9);
  CHECK(pts.size() == 81);
  double prev = 1e300;
  for (int N : {101, 201, 401})
  {
    const auto rec = sine_limit_check(N, pts, LimitRegime::origin);
    CHECK(rec.sup_difference < prev);
    prev = rec.sup_difference;
  }
}

TEST_SUITE("statistical")
{
  TEST_CASE("positive eigenvalues at N=201 follow the quarter circle")
  {
    const auto s = eigen_skew(sample_skew_gaussian(201, Seed{201, 3}), SpectrumJob::values_only);
    std::vector<double> pos;
    for (long j = 1; j <= s.positive_count(); j++)
    {
      pos.push_back(s.lambda(j) / std::sqrt(201.0));
    }
    CHECK(ks_distance(pos, quarter_circle_cdf) <= 0.07);
  }

  TEST_CASE("N=5 matrix samples against the joint density")
  {
    // 2-D histogram of (lambda_1, lambda_2) on a grid, expected counts by midpoint integration
    const int bins = 8;
    const double top = 6.0;
    const double w = top / bins;
    const int samples = 20000;
    Eigen::MatrixXd observed = Eigen::MatrixXd::Zero(bins, bins);
    for (int t = 0; t < samples; t++)
    {
      const auto s = eigen_skew(sample_skew_gaussian(5, Seed{55, 0}.substream(static_cast<std::uint64_t>(t))),
                                SpectrumJob::values_only);
      const int a = std::min(bins - 1, static_cast<int>(s.lambda(1) / w));
      const int b = std::min(bins - 1, static_cast<int>(s.lambda(2) / w));
      observed(a, b) += 1.0;
    }
    const int sub = 24;
    Eigen::MatrixXd mass = Eigen::MatrixXd::Zero(bins, bins);
    for (int a = 0; a < bins; a++)
    {
      for (int b = a; b < bins; b++)
      {
        for (int i = 0; i < sub; i++)
        {
          for (int j = 0; j < sub; j++)
          {
            const double x = (a + (i + 0.5) / sub) * w;
            const double y = (b + (j + 0.5) / sub) * w;
            if (x < y)
            {
              mass(a, b) += std::exp(joint_density_log(5, {x, y}));
            }
          }
        }
      }
    }
    mass /= mass.sum();
    double chi2 = 0.0;
    int cells = 0;
    double rest_obs = 0.0;
    double rest_exp = 0.0;
    for (int a = 0; a < bins; a++)
    {
      for (int b = a; b < bins; b++)
      {
        const double e = mass(a, b) * samples;
        if (e < 5.0)
        {
          rest_obs += observed(a, b);
          rest_exp += e;
          continue;
        }
        chi2 += std::pow(observed(a, b) - e, 2) / e;
        cells++;
      }
    }
    if (rest_exp > 0.0)
    {
      chi2 += std::pow(rest_obs - rest_exp, 2) / rest_exp;
      cells++;
    }
    CHECK(chi_square_survival(chi2, cells - 1) > 0.01);
  }
}
