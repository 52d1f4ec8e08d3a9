#include "doctest.h"

#include <cmath>
#include <sstream>

#include "rmt/analysis.hpp"
#include "rmt/core_linalg.hpp"
#include "rmt/ensembles.hpp"
#include "rmt/errors.hpp"
#include "rmt/stats.hpp"

using namespace rmt;

TEST_CASE("tournament constraints hold for sampled matrices")
{
  for (std::size_t n : {1u, 2u, 5u, 30u})
  {
    const auto D = sample_tournament(n, Seed{n, 0}).dense();
    const Eigen::MatrixXi target = Eigen::MatrixXi::Ones(n, n) - Eigen::MatrixXi::Identity(n, n);
    CHECK(D + D.transpose() == target);
    CHECK(D.diagonal().cwiseAbs().sum() == 0);
  }
  CHECK(sample_tournament(1, Seed{}).dense()(0, 0) == 0);
  CHECK_THROWS_AS(sample_tournament(0, Seed{}), InvalidInput);
}

TEST_CASE("from_dense validates tournaments")
{
  Eigen::MatrixXi D(2, 2);
  D << 0, 1, 1, 0;
  CHECK_THROWS_AS(TournamentMatrix::from_dense(D), InvalidInput);
  D << 0, 1, 0, 0;
  CHECK(TournamentMatrix::from_dense(D)(0, 1) == 1);
  D << 1, 0, 1, 0;
  CHECK_THROWS_AS(TournamentMatrix::from_dense(D), InvalidInput);
}

TEST_CASE("bit mean of n=5 tournaments")
{
  const Seed seed{0, 0};
  long ones = 0;
  long bits = 0;
  for (std::uint64_t t = 0; t < 10000; t++)
  {
    const auto D = sample_tournament(5, seed.substream(t));
    for (std::size_t i = 0; i < 5; i++)
    {
      for (std::size_t j = i + 1; j < 5; j++)
      {
        ones += D(i, j);
        bits++;
      }
    }
  }
  const double mean = static_cast<double>(ones) / static_cast<double>(bits);
  CHECK(mean >= 0.47);
  CHECK(mean <= 0.53);
}

TEST_CASE("cyclic tournament to skew")
{
  const auto D = cyclic_tournament3();
  CHECK(D(0, 1) == 1);
  CHECK(D(1, 2) == 1);
  CHECK(D(2, 0) == 1);
  const SkewMatrix W = tournament_to_skew(D);
  CHECK(W(0, 1) == 1.0);
  CHECK(W(0, 2) == -1.0);
  CHECK(W(1, 2) == 1.0);
  CHECK(tournament_to_skew(sample_tournament(1, Seed{})).dense()(0, 0) == 0.0);
  const Eigen::MatrixXd S = shifted_tournament(D);
  CHECK(S.trace() == 3.0);
  CHECK(S(0, 1) == 2.0);
}

TEST_CASE("M = 2iD - i(J - I) and tr W^2 = -n(n-1)")
{
  for (std::size_t n : {2u, 7u, 50u})
  {
    const auto D = sample_tournament(n, Seed{n, 4});
    const Eigen::MatrixXd W = tournament_to_skew(D).dense();
    const Eigen::MatrixXd J = Eigen::MatrixXd::Ones(n, n) - Eigen::MatrixXd::Identity(n, n);
    CHECK((W - (2.0 * D.dense().cast<double>() - J)).norm() == 0.0);
    CHECK((W * W).trace() == -static_cast<double>(n * (n - 1)));
    CHECK(W.cwiseAbs().sum() == static_cast<double>(n * (n - 1)));
  }
}

TEST_CASE("pm1 sampler is the image of the tournament sampler")
{
  for (std::uint64_t s = 0; s < 5; s++)
  {
    const Seed seed{s, 17};
    CHECK(sample_skew_pm1(23, seed) == tournament_to_skew(sample_tournament(23, seed)));
  }
  const auto W2 = sample_skew_pm1(2, Seed{3, 3});
  CHECK(std::abs(W2(0, 1)) == 1.0);
}

TEST_CASE("seed (7,1), n=201: sum of squared eigenvalues is n(n-1)")
{
  const auto s = eigen_skew(sample_skew_pm1(201, Seed{7, 1}), SpectrumJob::values_only);
  CHECK(s.values.squaredNorm() == doctest::Approx(201.0 * 200.0).epsilon(1e-10));
}

TEST_CASE("samplers are deterministic")
{
  CHECK(sample_skew_gaussian(9, Seed{5, 2}, 0.5) == sample_skew_gaussian(9, Seed{5, 2}, 0.5));
  CHECK_FALSE(sample_skew_gaussian(9, Seed{5, 2}) == sample_skew_gaussian(9, Seed{5, 3}));
  CHECK(sample_gue(6, Seed{1, 1}).dense() == sample_gue(6, Seed{1, 1}).dense());
  CHECK(sample_unit_vector(10, Seed{2, 2}) == sample_unit_vector(10, Seed{2, 2}));
  CHECK(sample_unit_vector(10, Seed{2, 2}).norm() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(sample_skew_gaussian(1, Seed{}).frobenius_norm_squared() == 0.0);
}

TEST_CASE("gaussian skew entry variance")
{
  const double scale = 0.7;
  std::vector<double> sq;
  for (std::uint64_t t = 0; sq.size() < 100000; t++)
  {
    const auto W = sample_skew_gaussian(20, Seed{12, 0}.substream(t), scale);
    for (double x : W.lower())
    {
      sq.push_back(x * x);
    }
  }
  const auto m = mean_estimate(sq);
  CHECK(std::abs(m.mean - scale * scale) <= 3.0 * m.std_error);
}

TEST_CASE("gue is hermitian with real gaussian diagonal")
{
  const auto G = sample_gue(5, Seed{6, 6}).dense();
  CHECK((G - G.adjoint()).norm() == 0.0);
  CHECK(G.diagonal().imag().norm() == 0.0);
  const auto one = sample_gue(1, Seed{6, 6}).dense();
  CHECK(one(0, 0).imag() == 0.0);
}

TEST_CASE("rank-one model requires a unit direction")
{
  Eigen::VectorXd b = Eigen::VectorXd::Ones(3);
  CHECK_THROWS_AS(RankOnePerturbedModel(HermitianMatrix(3), b, 1.0), InvalidInput);
  b /= std::sqrt(3.0);
  const RankOnePerturbedModel m(HermitianMatrix(3), b, 3.0);
  CHECK(std::abs(m.dense()(0, 1) - Complex(0.0, 1.0)) <= 1e-15);
}

TEST_CASE("matrix csv round trip")
{
  const SkewMatrix W = sample_skew_gaussian(6, Seed{9, 9});
  std::stringstream ss;
  write_skew_csv(ss, W);
  CHECK(ss.str().rfind("# skew n=6", 0) == 0);
  CHECK(read_skew_csv(ss) == W);

  const TournamentMatrix D = sample_tournament(7, Seed{9, 9});
  std::stringstream st;
  write_tournament_csv(st, D);
  CHECK(st.str().rfind("# tournament n=7", 0) == 0);
  CHECK(read_tournament_csv(st) == D);

  std::stringstream bad("# skew n=3\n1\n2\n");
  CHECK_THROWS_AS(read_skew_csv(bad), InvalidInput);
  std::stringstream wrong("# tournament n=2\n2\n");
  CHECK_THROWS_AS(read_tournament_csv(wrong), InvalidInput);
}

TEST_SUITE("statistical")
{
  TEST_CASE("gue normalization: E tr G^2 / n^2 = 1 at n=8")
  {
    std::vector<double> x;
    for (std::uint64_t t = 0; t < 10000; t++)
    {
      const auto G = sample_gue(8, Seed{31, 0}.substream(t)).dense();
      x.push_back((G * G).trace().real() / 64.0);
    }
    const auto m = mean_estimate(x);
    CHECK(std::abs(m.mean - 1.0) <= 3.0 * m.std_error);
  }

  TEST_CASE("orthogonal conjugation leaves the largest-eigenvalue law unchanged")
  {
    const std::size_t n = 8;
    Eigen::MatrixXd Z(n, n);
    CounterRng rng(Seed{77, 0});
    for (Eigen::Index i = 0; i < Z.size(); i++)
    {
      Z(i) = rng.normal();
    }
    const Eigen::MatrixXd O = Eigen::HouseholderQR<Eigen::MatrixXd>(Z).householderQ();
    std::vector<double> conj_max;
    std::vector<double> plain_max;
    for (std::uint64_t t = 0; t < 2000; t++)
    {
      const Eigen::MatrixXd W = sample_skew_gaussian(n, Seed{78, 0}.substream(t)).dense();
      Eigen::MatrixXd C = O * W * O.transpose();
      C = 0.5 * (C - C.transpose()).eval();
      C.diagonal().setZero();
      conj_max.push_back(eigen_skew(SkewMatrix::from_dense(C), SpectrumJob::values_only).values.maxCoeff());
      plain_max.push_back(
          eigen_skew(sample_skew_gaussian(n, Seed{79, 0}.substream(t)), SpectrumJob::values_only).values.maxCoeff());
    }
    CHECK(ks_two_sample(conj_max, plain_max).p_value > 0.01);
  }

  TEST_CASE("rescaled pm1 spectrum at n=1000 is close to the semicircle")
  {
    const auto s = eigen_skew(sample_skew_pm1(1000, Seed{1000, 0}), SpectrumJob::values_only);
    std::vector<double> x(s.values.data(), s.values.data() + s.values.size());
    for (double &v : x)
    {
      v /= std::sqrt(1000.0);
    }
    CHECK(ks_distance(x, semicircle_cdf) <= 0.05);
  }
}
