#include "doctest.h"

#include <cmath>

#include "rmt/core_linalg.hpp"
#include "rmt/dbm.hpp"
#include "rmt/ensembles.hpp"
#include "rmt/errors.hpp"
#include "rmt/stats.hpp"

using namespace rmt;

namespace
{

Eigen::VectorXd positive_values(const SkewSpectrum &s)
{
  Eigen::VectorXd out(s.positive_count());
  for (long j = 1; j <= s.positive_count(); j++)
  {
    out(j - 1) = s.lambda(j);
  }
  return out;
}

}  // namespace

TEST_CASE("matrix flow at T=0 is the start")
{
  const auto M0 = sample_skew_gaussian(4, Seed{1, 4});
  const auto path = matrix_flow(M0, 0.0, 0.01, Seed{2, 2});
  REQUIRE(path.snapshots.size() == 1);
  CHECK(path.snapshots[0] == M0);
  CHECK(path.times[0] == 0.0);
  CHECK_THROWS_AS(matrix_flow(M0, 1.0, 0.0, Seed{}), InvalidInput);
}

TEST_CASE("matrix flow is deterministic and records T")
{
  const auto M0 = sample_skew_gaussian(6, Seed{1, 6});
  const auto a = matrix_flow(M0, 0.35, 0.1, Seed{4, 4}, 2);
  const auto b = matrix_flow(M0, 0.35, 0.1, Seed{4, 4}, 2);
  REQUIRE(a.snapshots.size() == b.snapshots.size());
  for (std::size_t k = 0; k < a.snapshots.size(); k++)
  {
    CHECK(a.snapshots[k] == b.snapshots[k]);
    CHECK(a.times[k] == b.times[k]);
    // packed storage keeps the matrix exactly anti-symmetric
    const Eigen::MatrixXd D = a.snapshots[k].dense();
    CHECK((D + D.transpose()).norm() == 0.0);
  }
  CHECK(a.times.back() == doctest::Approx(0.35).epsilon(1e-14));
  for (std::size_t k = 1; k < a.times.size(); k++)
  {
    CHECK(a.times[k] > a.times[k - 1]);
  }
}

TEST_CASE("matrix flow entry variance grows like t/N")
{
  const std::size_t n = 4;
  const double t = 0.5;
  const auto M0 = sample_skew_gaussian(n, Seed{8, 0});
  std::vector<double> excess;
  for (std::uint64_t k = 0; k < 10000; k++)
  {
    const auto path = matrix_flow(M0, t, 0.125, Seed{9, 0}.substream(k), 1000);
    const double e = path.snapshots.back()(1, 0);
    excess.push_back(e * e - M0(1, 0) * M0(1, 0));
  }
  const auto m = mean_estimate(excess);
  CHECK(std::abs(m.mean - t / n) <= 3.0 * m.std_error);
}

TEST_CASE("ou interpolation")
{
  const auto M0 = sample_skew_gaussian(7, Seed{3, 7}, 1.0 / std::sqrt(7.0));
  CHECK(ou_interpolation(M0, 0.0, Seed{5, 5}) == M0);
  CHECK(ou_interpolation(M0, 0.4, Seed{5, 5}) == ou_interpolation(M0, 0.4, Seed{5, 5}));
  CHECK_THROWS_AS(ou_interpolation(M0, -1.0, Seed{}), InvalidInput);
}

TEST_CASE("ou interpolation entry variance at t = 0.3")
{
  const std::size_t n = 6;
  const double t = 0.3;
  const double v0 = 4.0;
  std::vector<double> sq;
  for (std::uint64_t k = 0; sq.size() < 60000; k++)
  {
    const auto M0 = sample_skew_gaussian(n, Seed{11, 0}.substream(k), std::sqrt(v0));
    const auto W = ou_interpolation(M0, t, Seed{12, 0}.substream(k));
    for (double x : W.lower())
    {
      sq.push_back(x * x);
    }
  }
  const auto m = mean_estimate(sq);
  const double expect = std::exp(-t) * v0 + (1.0 - std::exp(-t)) / n;
  CHECK(std::abs(m.mean - expect) <= 3.0 * m.std_error);
}

TEST_CASE("noiseless single particle: lambda^2 grows by 2t/N")
{
  SdeOptions opt;
  opt.noise = false;
  opt.record_every = 1000;
  const auto path = eigenvalue_sde(Eigen::VectorXd::Constant(1, 0.8), 3, 1.0, 1e-4, Seed{}, SdeVariant::brownian, opt);
  REQUIRE(path.values.size() >= 2);
  CHECK(path.times.back() == doctest::Approx(1.0));
  const double expect = std::sqrt(0.64 + 2.0 / 3.0);
  CHECK(std::abs(path.values.back()(0) - expect) <= 1e-4);
  for (std::size_t k = 0; k < path.times.size(); k++)
  {
    CHECK(std::abs(path.values[k](0) - std::sqrt(0.64 + 2.0 * path.times[k] / 3.0)) <= 1e-4);
  }
}

TEST_CASE("eigenvalue sde preconditions")
{
  CHECK_THROWS_AS(eigenvalue_sde(Eigen::Vector2d(2.0, 1.0), 5, 0.1, 0.01, Seed{}), InvalidInput);
  CHECK_THROWS_AS(eigenvalue_sde(Eigen::Vector2d(0.0, 1.0), 5, 0.1, 0.01, Seed{}), InvalidInput);
  CHECK_THROWS_AS(eigenvalue_sde(Eigen::Vector2d(1.0, 2.0), 7, 0.1, 0.01, Seed{}), InvalidInput);
  CHECK_THROWS_AS(eigenvalue_sde(Eigen::Vector2d(1.0, 2.0), 5, 0.1, -0.01, Seed{}), InvalidInput);
}

TEST_CASE("eigenvalue paths stay ordered and positive")
{
  for (SdeVariant v : {SdeVariant::brownian, SdeVariant::ou})
  {
    const auto s = eigen_skew(sample_skew_gaussian(9, Seed{13, 9}), SpectrumJob::values_only);
    const auto path = eigenvalue_sde(positive_values(s), 9, 1.0, 1e-3, Seed{14, 1}, v);
    CHECK(path.values.size() == path.times.size());
    for (const auto &lam : path.values)
    {
      CHECK(lam(0) > 0.0);
      for (Eigen::Index j = 1; j < lam.size(); j++)
      {
        CHECK(lam(j) > lam(j - 1));
      }
    }
    const auto again = eigenvalue_sde(positive_values(s), 9, 1.0, 1e-3, Seed{14, 1}, v);
    CHECK(again.values.back() == path.values.back());
  }
}

TEST_CASE("even N has no zero-mode drift")
{
  SdeOptions opt;
  opt.noise = false;
  // two particles, even N = 4: d lambda_2 = (1/4)[1/(l2 - l1) + 1/(l2 + l1)] dt, no 1/lambda term
  const Eigen::Vector2d l0(1.0, 2.0);
  const double dt = 1e-6;
  const auto path = eigenvalue_sde(l0, 4, dt, dt, Seed{}, SdeVariant::brownian, opt);
  const double rate = (path.values.back()(1) - 2.0) / dt;
  CHECK(rate == doctest::Approx(0.25 * (1.0 + 1.0 / 3.0)).epsilon(1e-4));
  const auto odd = eigenvalue_sde(l0, 5, dt, dt, Seed{}, SdeVariant::brownian, opt);
  const double rate5 = (odd.values.back()(1) - 2.0) / dt;
  CHECK(rate5 == doctest::Approx(0.2 * (1.0 + 1.0 / 3.0 + 0.5)).epsilon(1e-4));
  const auto ou = eigenvalue_sde(l0, 5, dt, dt, Seed{}, SdeVariant::ou, opt);
  const double rate_ou = (ou.values.back()(1) - 2.0) / dt;
  CHECK(rate_ou == doctest::Approx(0.2 * (1.0 + 1.0 / 3.0 + 0.5) - 2.0 / 10.0).epsilon(1e-4));
}

TEST_CASE("eigenvector flow basics")
{
  const auto spec0 = eigen_skew(sample_skew_gaussian(7, Seed{15, 7}));
  const auto still = eigenvector_flow(spec0, 0.0, 1e-3, Seed{16, 0});
  REQUIRE(still.states.size() == 1);
  CHECK((still.states[0].vectors - spec0.vectors).norm() == 0.0);

  SdeOptions opt;
  opt.record_every = 50;
  const auto path = eigenvector_flow(spec0, 0.5, 1e-3, Seed{16, 0}, opt);
  REQUIRE(path.states.size() >= 2);
  for (const auto &s : path.states)
  {
    for (long k = -s.positive_count(); k <= s.positive_count(); k++)
    {
      CHECK(std::abs(s.vector(k).norm() - 1.0) <= 1e-8);
    }
    CHECK(s.vector(0).imag().norm() <= 1e-8);
    CHECK((s.vector(-2) - s.vector(2).conjugate()).norm() <= 1e-8);
    const Eigen::MatrixXcd gram = s.vectors.adjoint() * s.vectors;
    CHECK((gram - Eigen::MatrixXcd::Identity(7, 7)).norm() <= 1e-8);
    for (long j = 1; j < s.positive_count(); j++)
    {
      CHECK(s.lambda(j + 1) > s.lambda(j));
    }
  }
  CHECK_THROWS_AS(eigenvector_flow(eigen_skew(sample_skew_gaussian(7, Seed{15, 7}), SpectrumJob::values_only), 0.1,
                                   1e-3, Seed{}),
                  InvalidInput);
}

TEST_CASE("eigenvector flow states rebuild an anti-symmetric matrix")
{
  const auto spec0 = eigen_skew(sample_skew_gaussian(5, Seed{17, 5}));
  SdeOptions opt;
  opt.record_every = 10;
  const auto path = eigenvector_flow(spec0, 0.01, 1e-3, Seed{18, 0}, opt);
  const auto &s = path.states.back();
  const Eigen::MatrixXcd rebuilt = s.vectors * s.values.cast<Complex>().asDiagonal() * s.vectors.adjoint();
  // i W is Hermitian with purely imaginary entries
  CHECK(rebuilt.real().norm() <= 1e-8);
  CHECK((rebuilt + rebuilt.transpose()).norm() <= 1e-8);
  const Eigen::MatrixXcd start = spec0.vectors * spec0.values.cast<Complex>().asDiagonal() * spec0.vectors.adjoint();
  CHECK((rebuilt - start).norm() <= 1.0);
}

TEST_SUITE("statistical")
{
  TEST_CASE("n=5 matrix flow and eigenvalue sde agree in law")
  {
    const auto M0 = sample_skew_gaussian(5, Seed{21, 5});
    const auto cmp = compare_dbm(M0, 0.1, 1e-3, 2000, Seed{22, 0});
    CHECK(std::abs(cmp.z_sum_sq) <= 3.0);
    CHECK(std::abs(cmp.z_max) <= 3.0);
    CHECK(std::abs(cmp.matrix_sum_sq.mean - cmp.expected_sum_sq) <= 3.0 * cmp.matrix_sum_sq.std_error);
  }

  TEST_CASE("n=3 matrix flow and eigenvalue sde agree in law")
  {
    const auto M0 = sample_skew_gaussian(3, Seed{23, 3});
    const auto cmp = compare_dbm(M0, 0.2, 1e-3, 2000, Seed{24, 0});
    CHECK(std::abs(cmp.z_sum_sq) <= 3.0);
    CHECK(std::abs(cmp.z_max) <= 3.0);
  }

  TEST_CASE("ou variant keeps the gaussian model stationary")
  {
    const std::size_t N = 5;
    std::vector<double> start;
    std::vector<double> end;
    for (std::uint64_t k = 0; k < 1500; k++)
    {
      const auto s = eigen_skew(sample_skew_gaussian(N, Seed{25, 0}.substream(k)), SpectrumJob::values_only);
      const Eigen::VectorXd l0 = positive_values(s);
      SdeOptions opt;
      opt.record_every = 100000;
      const auto path = eigenvalue_sde(l0, N, 5.0, 1e-2, Seed{26, 0}.substream(k), SdeVariant::ou, opt);
      start.push_back(l0.squaredNorm());
      end.push_back(path.values.back().squaredNorm());
    }
    const auto a = mean_estimate(start);
    const auto b = mean_estimate(end);
    // E sum lambda^2 over positive labels is N(N-1)/2 for unit-variance entries
    CHECK(std::abs(a.mean - 10.0) <= 3.0 * a.std_error);
    CHECK(std::abs(b.mean - 10.0) <= 3.0 * b.std_error);
  }

  TEST_CASE("eigenvector overlaps agree with fresh samples at n=5, t=1")
  {
    const std::size_t n = 5;
    const auto W0 = sample_skew_gaussian(n, Seed{27, 5});
    const auto spec0 = eigen_skew(W0);
    Eigen::VectorXcd q = Eigen::VectorXcd::Zero(n);
    q(0) = 1.0;
    std::vector<double> flow;
    std::vector<double> fresh;
    SdeOptions opt;
    opt.record_every = 100000;
    for (std::uint64_t k = 0; k < 2000; k++)
    {
      const auto path = eigenvector_flow(spec0, 1.0, 2e-3, Seed{28, 0}.substream(k), opt);
      flow.push_back(std::norm(q.dot(path.states.back().vector(1))));
      const Eigen::MatrixXd G = sample_skew_gaussian(n, Seed{29, 0}.substream(k), 1.0 / std::sqrt(double(n))).dense();
      const auto s = eigen_skew(SkewMatrix::from_dense(W0.dense() + G));
      fresh.push_back(std::norm(q.dot(s.vector(1))));
    }
    const auto a = mean_estimate(flow);
    const auto b = mean_estimate(fresh);
    const double se = std::sqrt(a.std_error * a.std_error + b.std_error * b.std_error);
    CHECK(std::abs(a.mean - b.mean) <= 3.0 * se);
  }
}
