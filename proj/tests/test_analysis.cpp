#include "doctest.h"

#include <cmath>

#include "oracles.hpp"
#include "rmt/analysis.hpp"
#include "rmt/core_linalg.hpp"
#include "rmt/ensembles.hpp"
#include "rmt/errors.hpp"
#include "rmt/quadrature.hpp"
#include "rmt/stats.hpp"

using namespace rmt;

namespace
{

SkewSpectrum spectrum_from_positive(const std::vector<double> &pos)
{
  // odd n: -pos reversed, 0, pos
  SkewSpectrum s;
  const std::size_t p = pos.size();
  s.n = 2 * p + 1;
  s.values.resize(static_cast<Eigen::Index>(s.n));
  for (std::size_t j = 0; j < p; j++)
  {
    s.values(static_cast<Eigen::Index>(p - 1 - j)) = -pos[j];
    s.values(static_cast<Eigen::Index>(p + 1 + j)) = pos[j];
  }
  s.values(static_cast<Eigen::Index>(p)) = 0.0;
  return s;
}

}  // namespace

TEST_CASE("semicircle stieltjes transform")
{
  CHECK(std::abs(m_sc(Complex(0.0, 1.0)) - Complex(0.0, (std::sqrt(5.0) - 1.0) / 2.0)) <= 1e-14);
  CHECK(std::abs(m_sc(Complex(0.0, 2.0)) - Complex(0.0, std::sqrt(2.0) - 1.0)) <= 1e-14);
  CHECK_THROWS_AS(m_sc(Complex(0.3, 0.0)), InvalidInput);
  CHECK_THROWS_AS(m_sc(Complex(0.3, -1.0)), InvalidInput);
  for (Complex z : {Complex(0.5, 0.1), Complex(-3.0, 0.01), Complex(1.9, 1e-6), Complex(10.0, 5.0)})
  {
    const Complex m = m_sc(z);
    CHECK(m.imag() > 0.0);
    CHECK(std::abs(m * m + z * m + 1.0) <= 1e-12);
  }
}

TEST_CASE("semicircle transform against quadrature at 0.5 + 0.1i")
{
  const Complex z(0.5, 0.1);
  // substitution x = 2 sin(theta) removes the endpoint square roots
  const auto re = [z](double th) {
    const double x = 2.0 * std::sin(th);
    return (std::sqrt(4.0 - x * x) / (2.0 * M_PI) / (x - z) * 2.0 * std::cos(th)).real();
  };
  const auto im = [z](double th) {
    const double x = 2.0 * std::sin(th);
    return (std::sqrt(4.0 - x * x) / (2.0 * M_PI) / (x - z) * 2.0 * std::cos(th)).imag();
  };
  const Complex ref(oracle::simpson(re, -M_PI / 2, M_PI / 2, 200000), oracle::simpson(im, -M_PI / 2, M_PI / 2, 200000));
  CHECK(std::abs(m_sc(z) - ref) <= 1e-8);
}

TEST_CASE("semicircle density and distribution functions")
{
  CHECK(semicircle_density(0.0) == doctest::Approx(1.0 / M_PI));
  CHECK(semicircle_density(2.5) == 0.0);
  CHECK(semicircle_cdf(0.0) == doctest::Approx(0.5));
  CHECK(semicircle_cdf(-2.0) == doctest::Approx(0.0).scale(1.0));
  CHECK(semicircle_cdf(3.0) == 1.0);
  CHECK(quarter_circle_cdf(0.0) == 0.0);
  CHECK(quarter_circle_cdf(2.0) == doctest::Approx(1.0));
  for (double x : {0.3, 1.0, 1.7})
  {
    CHECK(quarter_circle_cdf(x) == doctest::Approx(2.0 * semicircle_cdf(x) - 1.0).epsilon(1e-12));
    const double q = oracle::simpson(semicircle_density, -x, x, 20000);
    CHECK(quarter_circle_cdf(x) == doctest::Approx(q).epsilon(1e-8));
  }
}

TEST_CASE("empirical transform of a single atom")
{
  const auto s = eigen_skew(sample_skew_gaussian(1, Seed{}));
  CHECK(std::abs(empirical_stieltjes(s.values, Complex(0.0, 1.0)) - Complex(0.0, 1.0)) <= 1e-15);
  const auto scan = local_law_scan(s, {0.0}, {1.0});
  REQUIRE(scan.points.size() == 1);
  CHECK(std::abs(scan.points[0].empirical - Complex(0.0, 1.0)) <= 1e-15);
  CHECK(std::isnan(scan.points[0].epsilon));
}

TEST_CASE("local law scan on a symmetric spectrum")
{
  const auto s = eigen_skew(sample_skew_pm1(151, Seed{2, 151}), SpectrumJob::values_only);
  const std::vector<double> energies{-1.0, -0.3, 0.3, 1.0};
  const std::vector<double> etas{0.05, 0.5};
  const auto scan = local_law_scan(s, energies, etas);
  REQUIRE(scan.points.size() == 8);
  CHECK(scan.points[1].energy == -1.0);
  CHECK(scan.points[1].eta == 0.5);
  for (const auto &p : scan.points)
  {
    CHECK(p.empirical.imag() > 0.0);
    CHECK(p.deviation == doctest::Approx(std::abs(p.empirical - p.limit)));
    // deviation = 1 / (n^{1-eps} eta)
    CHECK(1.0 / (std::pow(151.0, 1.0 - p.epsilon) * p.eta) == doctest::Approx(p.deviation).epsilon(1e-10));
  }
  // m_N(-conj z) = -conj m_N(z)
  for (std::size_t k = 0; k < 2; k++)
  {
    const Complex a = scan.points[k * 2].empirical;
    const Complex b = scan.points[(3 - k) * 2].empirical;
    CHECK(std::abs(a + std::conj(b)) <= 1e-12);
  }
}

TEST_CASE("classical locations")
{
  CHECK(classical_location(1.0) == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(classical_location(0.0) == doctest::Approx(0.0).scale(1.0));
  // independent bisection on a quadrature cdf
  double lo = 0.0;
  double hi = 2.0;
  for (int it = 0; it < 60; it++)
  {
    const double mid = 0.5 * (lo + hi);
    const double mass = 2.0 * integrate_panels(semicircle_density, 0.0, mid, 40, 32);
    (mass < 0.5 ? lo : hi) = mid;
  }
  CHECK(std::abs(classical_location(0.5) - 0.5 * (lo + hi)) <= 1e-9);
  const auto g = classical_locations(40);
  REQUIRE(g.size() == 40);
  CHECK(g.back() == doctest::Approx(2.0));
  for (std::size_t j = 1; j < g.size(); j++)
  {
    CHECK(g[j] > g[j - 1]);
  }
  CHECK(g[19] == doctest::Approx(classical_location(0.5)).epsilon(1e-12));
}

TEST_CASE("rigidity report on a deterministic spectrum")
{
  const std::size_t p = 50;
  const auto g = classical_locations(p);
  const double rn = std::sqrt(static_cast<double>(2 * p + 1));
  std::vector<double> pos;
  for (double x : g)
  {
    pos.push_back(rn * x);
  }
  const auto exact = rigidity_report(spectrum_from_positive(pos), g);
  CHECK(exact.max_deviation <= 1e-14);
  CHECK(exact.first == 13);
  CHECK(exact.last == 37);
  // one shifted eigenvalue inside the bulk moves the maximum by exactly delta / sqrt(n)
  const double delta = 0.3;
  pos[24] += delta;
  const auto bumped = rigidity_report(spectrum_from_positive(pos), g);
  CHECK(bumped.argmax == 25);
  CHECK(bumped.max_deviation == doctest::Approx(delta / rn).epsilon(1e-10));
  // outside the window it is ignored
  pos[24] -= delta;
  pos[2] += delta;
  CHECK(rigidity_report(spectrum_from_positive(pos), g).max_deviation <= 1e-14);
}

TEST_CASE("gap observables and labels")
{
  CHECK(gap_observable(GapObservable::bump, 1.0) == doctest::Approx(1.0));
  CHECK(gap_observable(GapObservable::bump, 0.0) == 0.0);
  CHECK(gap_observable(GapObservable::bump, 2.5) == 0.0);
  CHECK(gap_observable(GapObservable::cosine, 1.0) == doctest::Approx(1.0));
  CHECK(gap_observable(GapObservable::cosine, 0.5) == doctest::Approx(0.5));
  CHECK(parse_gap_ensemble(to_string(GapEnsemble::gaussian)) == GapEnsemble::gaussian);
  CHECK(parse_gap_observable(to_string(GapObservable::cosine)) == GapObservable::cosine);
  CHECK_THROWS_AS(parse_gap_ensemble("goe"), InvalidInput);
}

TEST_CASE("identical ensembles and seeds give zero difference")
{
  GapOptions opt;
  opt.ensemble_b = GapEnsemble::pm1;
  opt.size_a = opt.size_b = 61;
  opt.seed_b = opt.seed_a;
  const auto cmp = gap_statistics(40, opt);
  CHECK(cmp.difference == 0.0);
  CHECK(cmp.z_score == 0.0);
  CHECK(cmp.a.observable == cmp.b.observable);
}

TEST_CASE("bulk gaps sit in the spacing window")
{
  GapOptions opt;
  opt.size_a = opt.size_b = 201;
  const auto cmp = gap_statistics(200, opt);
  for (const auto *side : {&cmp.a, &cmp.b})
  {
    REQUIRE(side->density_gaps.size() == 200);
    CHECK(quantile(side->density_gaps, 0.05) > 0.02);
    CHECK(quantile(side->density_gaps, 0.95) < 10.0);
    for (double g : side->raw_gaps)
    {
      CHECK(g >= 0.0);
    }
  }
  CHECK(cmp.combined_std_error > 0.0);
}

TEST_CASE("rayleigh law and overlap preconditions")
{
  CHECK(rayleigh_cdf(std::sqrt(2.0 * std::log(2.0))) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(std::sqrt(2.0 * std::log(2.0)) == doctest::Approx(1.17741).epsilon(1e-5));
  Eigen::VectorXd q = Eigen::VectorXd::Ones(9);
  CHECK_THROWS_AS(overlap_experiment(9, 2, q, {1}, Seed{}), InvalidInput);
  q /= 3.0;
  CHECK_THROWS_AS(overlap_experiment(9, 2, q, {0}, Seed{}), InvalidInput);
  const auto rep = overlap_experiment(9, 3, q, {1, 2}, Seed{4, 9});
  CHECK(rep.samples.size() == 6);
  CHECK(rep.zero_samples.size() == 3);
  const auto labels = bulk_labels(401, 5);
  REQUIRE(labels.size() == 5);
  CHECK(labels.front() >= 50);
  CHECK(labels.back() <= 150);
}

TEST_CASE("cyclic minor and schur identity")
{
  const SkewMatrix W = tournament_to_skew(cyclic_tournament3());
  const auto rec = minor_consistency(W, Seed{5, 5});
  REQUIRE(rec.minor_values.size() == 2);
  CHECK(rec.minor_values(0) == doctest::Approx(-1.0));
  CHECK(rec.minor_values(1) == doctest::Approx(1.0));
  CHECK(rec.values(0) == doctest::Approx(-std::sqrt(3.0)));
  CHECK(rec.values(2) == doctest::Approx(std::sqrt(3.0)));
  CHECK(rec.interlaced);
  CHECK(rec.diagonal == 0.0);
  CHECK(rec.schur.size() == 5);
  CHECK(rec.max_relative_error <= 1e-8);

  const auto at = schur_identity(W, Complex(0.0, 2.0));
  CHECK(std::abs(at.direct - at.formula) <= 1e-10);
  // direct evaluation of 1/R_11 from the dense resolvent
  const Eigen::MatrixXcd M = Complex(0.0, 1.0) * W.dense().cast<Complex>();
  const Eigen::MatrixXcd R = (M - Complex(0.0, 2.0) * Eigen::MatrixXcd::Identity(3, 3)).inverse();
  CHECK(std::abs(at.direct - 1.0 / R(0, 0)) <= 1e-12);
}

TEST_CASE("minor interlacing for random samples")
{
  for (std::size_t n : {4u, 9u, 40u})
  {
    const auto rec = minor_consistency(sample_skew_pm1(n, Seed{6, n}), Seed{7, n});
    CHECK(rec.interlaced);
    CHECK(rec.max_violation <= 0.0);
    CHECK(rec.diagonal == 0.0);
    CHECK(rec.max_relative_error <= 1e-8);
  }
  CHECK_THROWS_AS(minor_consistency(sample_skew_pm1(2, Seed{})), InvalidInput);
}

TEST_SUITE("statistical")
{
  TEST_CASE("semicircle fit improves with size")
  {
    const auto small = run_semicircle(100, 5, Seed{8, 100});
    const auto large = run_semicircle(400, 5, Seed{8, 400});
    CHECK(large.mean_ks < small.mean_ks);
    CHECK(large.mean_ks <= 0.05);
  }

  TEST_CASE("local law at n=400")
  {
    const auto rep = run_local_law(400, 10, {0.0, 0.5, -0.5}, Seed{9, 400});
    CHECK(rep.deviations.size() == 30);
    CHECK(rep.within.rate >= 0.9);
  }

  TEST_CASE("bulk overlaps at n=200 are near Rayleigh")
  {
    const Eigen::VectorXd q = Eigen::VectorXd::Constant(200, 1.0 / std::sqrt(200.0));
    const auto rep = overlap_experiment(200, 100, q, bulk_labels(200, 5), Seed{10, 200});
    CHECK(rep.samples.size() == 500);
    CHECK(rep.ks <= 0.08);
  }

  TEST_CASE("bulk rigidity shrinks with size at the sqrt(log n) / n scale")
  {
    // an independent dense solve puts the n=1001 median near 0.006, three times n^-0.9
    const auto small = run_rigidity(251, 20, Seed{12, 251});
    const auto large = run_rigidity(1001, 20, Seed{12, 1001});
    CHECK(large.median < small.median);
    CHECK(large.median >= 0.004);
    CHECK(large.median <= 0.009);
    CHECK(large.threshold == doctest::Approx(std::pow(1001.0, -0.9)));
  }

  TEST_CASE("zero-mode overlaps are reported apart")
  {
    const Eigen::VectorXd q = Eigen::VectorXd::Constant(101, 1.0 / std::sqrt(101.0));
    const auto rep = overlap_experiment(101, 300, q, {25}, Seed{11, 101});
    CHECK(rep.samples.size() == 300);
    REQUIRE(rep.zero_samples.size() == 300);
    // a real unit vector gives a half-normal law, not Rayleigh
    CHECK(ks_distance(rep.zero_samples, rayleigh_cdf) > 0.1);
  }
}
