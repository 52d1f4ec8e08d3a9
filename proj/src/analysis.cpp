#include "rmt/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "rmt/ensembles.hpp"
#include "rmt/errors.hpp"
#include "rmt/parallel.hpp"

namespace rmt
{

namespace
{

constexpr double pi = std::numbers::pi;

std::pair<long, long> bulk_window(long p, double alpha)
{
  const long first = std::max(1L, static_cast<long>(std::ceil(alpha * static_cast<double>(p))));
  const long last = std::min(p, static_cast<long>(std::floor((1.0 - alpha) * static_cast<double>(p))));
  return {first, last};
}

SkewMatrix sample_gap_ensemble(GapEnsemble e, std::size_t n, const Seed &seed)
{
  return e == GapEnsemble::pm1 ? sample_skew_pm1(n, seed) : sample_skew_gaussian(n, seed, 1.0);
}

GapSide gap_side(GapEnsemble ensemble, std::size_t n, std::size_t trials, const Seed &seed,
                 const GapOptions &options)
{
  if (n < 4)
  {
    throw InvalidInput("gap_statistics: n must be at least 4");
  }
  GapSide side;
  side.ensemble = to_string(ensemble);
  side.n = n;
  const long p = static_cast<long>(n / 2);
  const auto window = static_cast<long>(options.window);
  long first = std::lround(options.bulk_fraction * static_cast<double>(p));
  first = std::clamp(first, 1L, p - window);
  if (window < 1 || first + window > p)
  {
    throw InvalidInput("gap_statistics: window does not fit among the positive eigenvalues");
  }
  side.first_gap = first;
  const double root_n = std::sqrt(static_cast<double>(n));
  const std::vector<double> gamma = classical_locations(static_cast<std::size_t>(p));
  side.raw_gaps.assign(trials * options.window, 0.0);
  side.density_gaps.assign(trials * options.window, 0.0);
  side.observable.assign(trials, 0.0);
  parallel_for(trials, resolve_jobs(options.jobs), [&](std::size_t t) {
    const SkewSpectrum spec = eigen_skew(sample_gap_ensemble(ensemble, n, seed.substream(t)), SpectrumJob::values_only);
    double acc = 0.0;
    for (long w = 0; w < window; w++)
    {
      const long k = first + w;
      const double gap = spec.lambda(k + 1) - spec.lambda(k);
      const double raw = root_n * gap;
      const double dens = raw * semicircle_density(gamma[static_cast<std::size_t>(k - 1)]);
      const std::size_t slot = t * options.window + static_cast<std::size_t>(w);
      side.raw_gaps[slot] = raw;
      side.density_gaps[slot] = dens;
      acc += gap_observable(options.observable, options.scale == GapScale::raw ? raw : dens);
    }
    side.observable[t] = acc / static_cast<double>(window);
  });
  side.estimate = mean_estimate(side.observable);
  return side;
}

}  // namespace

Complex m_sc(Complex z)
{
  if (!(z.imag() > 0.0))
  {
    throw InvalidInput("m_sc: Im z must be positive");
  }
  const Complex root = std::sqrt(z * z - 4.0);
  const Complex a = 0.5 * (-z + root);
  const Complex b = 0.5 * (-z - root);
  return a.imag() > 0.0 ? a : b;
}

double semicircle_density(double x)
{
  return std::abs(x) >= 2.0 ? 0.0 : std::sqrt(4.0 - x * x) / (2.0 * pi);
}

double semicircle_cdf(double x)
{
  if (x <= -2.0)
  {
    return 0.0;
  }
  if (x >= 2.0)
  {
    return 1.0;
  }
  return 0.5 + x * std::sqrt(4.0 - x * x) / (4.0 * pi) + std::asin(0.5 * x) / pi;
}

double quarter_circle_cdf(double x)
{
  if (x <= 0.0)
  {
    return 0.0;
  }
  return 2.0 * semicircle_cdf(x) - 1.0;
}

Complex empirical_stieltjes(const Eigen::VectorXd &values, Complex z)
{
  const double root_n = std::sqrt(static_cast<double>(values.size()));
  Complex sum = 0.0;
  for (Eigen::Index j = 0; j < values.size(); j++)
  {
    sum += 1.0 / (values(j) / root_n - z);
  }
  return sum / static_cast<double>(values.size());
}

StieltjesScan local_law_scan(const SkewSpectrum &spec, const std::vector<double> &energies,
                             const std::vector<double> &etas)
{
  StieltjesScan scan;
  scan.n = spec.n;
  const double log_n = std::log(static_cast<double>(spec.n));
  for (double E : energies)
  {
    for (double eta : etas)
    {
      StieltjesPoint pt;
      pt.energy = E;
      pt.eta = eta;
      const Complex z(E, eta);
      pt.empirical = empirical_stieltjes(spec.values, z);
      pt.limit = m_sc(z);
      pt.deviation = std::abs(pt.empirical - pt.limit);
      pt.epsilon = (log_n > 0.0 && pt.deviation > 0.0) ? 1.0 + std::log(pt.deviation * eta) / log_n
                                                        : std::numeric_limits<double>::quiet_NaN();
      scan.points.push_back(pt);
    }
  }
  return scan;
}

SemicircleReport run_semicircle(std::size_t n, std::size_t trials, const Seed &seed, int jobs)
{
  SemicircleReport rep;
  rep.n = n;
  rep.trials = trials;
  rep.ks.assign(trials, 0.0);
  const double root_n = std::sqrt(static_cast<double>(n));
  parallel_for(trials, resolve_jobs(jobs), [&](std::size_t t) {
    const SkewSpectrum spec = eigen_skew(sample_skew_pm1(n, seed.substream(t)), SpectrumJob::values_only);
    std::vector<double> x(spec.values.data(), spec.values.data() + spec.values.size());
    for (double &v : x)
    {
      v /= root_n;
    }
    rep.ks[t] = ks_distance(std::move(x), semicircle_cdf);
  });
  rep.mean_ks = mean_estimate(rep.ks).mean;
  return rep;
}

LocalLawReport run_local_law(std::size_t n, std::size_t trials, const std::vector<double> &energies, const Seed &seed,
                             int jobs, double eta_exponent, double threshold_exponent)
{
  LocalLawReport rep;
  rep.n = n;
  rep.trials = trials;
  rep.energies = energies;
  const double dn = static_cast<double>(n);
  rep.eta = std::pow(dn, -eta_exponent);
  rep.threshold = std::pow(dn, -threshold_exponent);
  rep.deviations.assign(trials * energies.size(), 0.0);
  parallel_for(trials, resolve_jobs(jobs), [&](std::size_t t) {
    const SkewSpectrum spec = eigen_skew(sample_skew_pm1(n, seed.substream(t)), SpectrumJob::values_only);
    const StieltjesScan scan = local_law_scan(spec, energies, {rep.eta});
    for (std::size_t e = 0; e < energies.size(); e++)
    {
      rep.deviations[t * energies.size() + e] = scan.points[e].deviation;
    }
  });
  const auto ok = static_cast<std::size_t>(
      std::count_if(rep.deviations.begin(), rep.deviations.end(), [&](double d) { return d <= rep.threshold; }));
  rep.within = wilson_interval(ok, rep.deviations.size());
  return rep;
}

double classical_location(double fraction)
{
  if (!(fraction >= 0.0 && fraction <= 1.0))
  {
    throw InvalidInput("classical_location: fraction must lie in [0, 1]");
  }
  if (fraction == 0.0)
  {
    return 0.0;
  }
  if (fraction == 1.0)
  {
    return 2.0;
  }
  double lo = 0.0;
  double hi = 2.0;
  while (hi - lo > 1e-12)
  {
    const double mid = 0.5 * (lo + hi);
    (quarter_circle_cdf(mid) < fraction ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

std::vector<double> classical_locations(std::size_t n_pos)
{
  if (n_pos == 0)
  {
    throw InvalidInput("classical_locations: need at least one location");
  }
  std::vector<double> out(n_pos);
  for (std::size_t j = 1; j <= n_pos; j++)
  {
    out[j - 1] = classical_location(static_cast<double>(j) / static_cast<double>(n_pos));
  }
  return out;
}

RigidityRecord rigidity_report(const SkewSpectrum &spec, const std::vector<double> &gamma, double alpha)
{
  const long p = spec.positive_count();
  if (gamma.size() != static_cast<std::size_t>(p))
  {
    throw InvalidInput("rigidity_report: need one classical location per positive eigenvalue");
  }
  RigidityRecord rec;
  std::tie(rec.first, rec.last) = bulk_window(p, alpha);
  const double root_n = std::sqrt(static_cast<double>(spec.n));
  for (long j = rec.first; j <= rec.last; j++)
  {
    const double d = std::abs(spec.lambda(j) / root_n - gamma[static_cast<std::size_t>(j - 1)]);
    if (d > rec.max_deviation || j == rec.first)
    {
      rec.max_deviation = d;
      rec.argmax = j;
    }
  }
  return rec;
}

RigidityExperiment run_rigidity(std::size_t n, std::size_t trials, const Seed &seed, int jobs,
                                double threshold_exponent, double alpha)
{
  RigidityExperiment rep;
  rep.n = n;
  rep.trials = trials;
  rep.threshold = std::pow(static_cast<double>(n), -threshold_exponent);
  rep.max_deviations.assign(trials, 0.0);
  const std::vector<double> gamma = classical_locations(n / 2);
  parallel_for(trials, resolve_jobs(jobs), [&](std::size_t t) {
    const SkewSpectrum spec = eigen_skew(sample_skew_pm1(n, seed.substream(t)), SpectrumJob::values_only);
    rep.max_deviations[t] = rigidity_report(spec, gamma, alpha).max_deviation;
  });
  const auto ok = static_cast<std::size_t>(std::count_if(rep.max_deviations.begin(), rep.max_deviations.end(),
                                                         [&](double d) { return d <= rep.threshold; }));
  rep.within = wilson_interval(ok, trials);
  if (trials > 0)
  {
    rep.median = median(rep.max_deviations);
    rep.q90 = quantile(rep.max_deviations, 0.9);
  }
  return rep;
}

std::string to_string(GapEnsemble e)
{
  return e == GapEnsemble::pm1 ? "pm1" : "gaussian";
}

std::string to_string(GapObservable o)
{
  return o == GapObservable::bump ? "bump" : "cosine";
}

GapEnsemble parse_gap_ensemble(const std::string &s)
{
  if (s == "pm1")
  {
    return GapEnsemble::pm1;
  }
  if (s == "gaussian")
  {
    return GapEnsemble::gaussian;
  }
  throw InvalidInput("unknown gap ensemble '" + s + "' (pm1, gaussian)");
}

GapObservable parse_gap_observable(const std::string &s)
{
  if (s == "bump")
  {
    return GapObservable::bump;
  }
  if (s == "cosine")
  {
    return GapObservable::cosine;
  }
  throw InvalidInput("unknown observable '" + s + "' (bump, cosine)");
}

double gap_observable(GapObservable o, double g)
{
  const double u = g - 1.0;
  if (std::abs(u) >= 1.0)
  {
    return 0.0;
  }
  if (o == GapObservable::bump)
  {
    return std::exp(1.0 - 1.0 / (1.0 - u * u));
  }
  const double c = std::cos(0.5 * pi * u);
  return c * c;
}

GapComparison gap_statistics(std::size_t trials, const GapOptions &options)
{
  if (trials < 2)
  {
    throw InvalidInput("gap_statistics: need at least two trials");
  }
  GapComparison out;
  out.a = gap_side(options.ensemble_a, options.size_a, trials, options.seed_a, options);
  out.b = gap_side(options.ensemble_b, options.size_b, trials, options.seed_b, options);
  out.difference = out.a.estimate.mean - out.b.estimate.mean;
  out.combined_std_error = std::hypot(out.a.estimate.std_error, out.b.estimate.std_error);
  out.z_score = out.combined_std_error > 0.0 ? out.difference / out.combined_std_error : 0.0;
  return out;
}

double rayleigh_cdf(double x)
{
  return x <= 0.0 ? 0.0 : -std::expm1(-0.5 * x * x);
}

std::vector<long> bulk_labels(std::size_t n, std::size_t count, double alpha)
{
  const auto [first, last] = bulk_window(static_cast<long>(n / 2), alpha);
  if (count == 0 || last < first)
  {
    throw InvalidInput("bulk_labels: empty bulk window");
  }
  std::vector<long> out;
  const long span = last - first;
  for (std::size_t k = 0; k < count; k++)
  {
    const long j = count == 1 ? first + span / 2
                              : first + std::lround(static_cast<double>(span) * static_cast<double>(k) /
                                                    static_cast<double>(count - 1));
    if (out.empty() || out.back() != j)
    {
      out.push_back(j);
    }
  }
  return out;
}

OverlapReport overlap_experiment(std::size_t n, std::size_t trials, const Eigen::VectorXd &q,
                                 const std::vector<long> &labels, const Seed &seed, int jobs)
{
  if (static_cast<std::size_t>(q.size()) != n || std::abs(q.norm() - 1.0) > 1e-12)
  {
    throw InvalidInput("overlap_experiment: q must be a unit vector of dimension n");
  }
  const long p = static_cast<long>(n / 2);
  for (long j : labels)
  {
    if (j < 1 || j > p)
    {
      throw InvalidInput("overlap_experiment: labels must lie in 1..floor(n/2)");
    }
  }
  OverlapReport rep;
  rep.n = n;
  rep.trials = trials;
  rep.labels = labels;
  rep.samples.assign(trials * labels.size(), 0.0);
  if (n % 2 == 1)
  {
    rep.zero_samples.assign(trials, 0.0);
  }
  const Eigen::VectorXcd qc = q.cast<Complex>();
  const double scale = std::sqrt(2.0 * static_cast<double>(n));
  parallel_for(trials, resolve_jobs(jobs), [&](std::size_t t) {
    const SkewSpectrum spec = eigen_skew(sample_skew_pm1(n, seed.substream(t)));
    for (std::size_t k = 0; k < labels.size(); k++)
    {
      rep.samples[t * labels.size() + k] = scale * std::abs(spec.vector(labels[k]).dot(qc));
    }
    if (n % 2 == 1)
    {
      rep.zero_samples[t] = std::sqrt(static_cast<double>(n)) * std::abs(spec.vector(0).dot(qc));
    }
  });
  rep.ks = ks_distance(rep.samples, rayleigh_cdf);
  return rep;
}

SchurPoint schur_identity(const SkewMatrix &W, Complex s)
{
  const std::size_t n = W.size();
  if (n < 2 || s.imag() == 0.0)
  {
    throw InvalidInput("schur_identity: need n >= 2 and non-real s");
  }
  const auto m = static_cast<Eigen::Index>(n);
  const Eigen::MatrixXd Wd = W.dense();
  const SkewSpectrum sub = eigen_skew(SkewMatrix::from_dense(Wd.bottomRightCorner(m - 1, m - 1)));
  const Eigen::MatrixXcd M = Complex(0.0, 1.0) * Wd.cast<Complex>();
  const Eigen::VectorXcd h = M.col(0).tail(m - 1);
  SchurPoint pt;
  pt.s = s;
  Eigen::VectorXcd e1 = Eigen::VectorXcd::Zero(m);
  e1(0) = 1.0;
  const Eigen::VectorXcd col = (M - s * Eigen::MatrixXcd::Identity(m, m)).partialPivLu().solve(e1);
  pt.direct = 1.0 / col(0);
  Complex sum = 0.0;
  for (Eigen::Index j = 0; j < m - 1; j++)
  {
    sum += std::norm(sub.vectors.col(j).dot(h)) / (sub.values(j) - s);
  }
  pt.formula = M(0, 0) - s - sum;
  pt.relative_error = std::abs(pt.direct - pt.formula) / std::max(std::abs(pt.direct), 1e-300);
  return pt;
}

MinorRecord minor_consistency(const SkewMatrix &W, const Seed &seed)
{
  const std::size_t n = W.size();
  if (n < 3)
  {
    throw InvalidInput("minor_consistency: n must be at least 3");
  }
  MinorRecord rec;
  rec.n = n;
  const Eigen::MatrixXd Wd = W.dense();
  const SkewMatrix minor = SkewMatrix::from_dense(Wd.bottomRightCorner(n - 1, n - 1));
  const SkewSpectrum full = eigen_skew(W, SpectrumJob::values_only);
  const SkewSpectrum sub = eigen_skew(minor, SpectrumJob::values_only);
  rec.values = full.values;
  rec.minor_values = sub.values;
  const double radius = std::max(1.0, full.values.cwiseAbs().maxCoeff());
  const double tol = 1e-10 * radius;
  rec.interlaced = true;
  for (Eigen::Index i = 0; i + 1 < static_cast<Eigen::Index>(n); i++)
  {
    const double v = std::max(rec.values(i) - rec.minor_values(i), rec.minor_values(i) - rec.values(i + 1));
    rec.max_violation = std::max(rec.max_violation, std::max(0.0, v));
    if (v > tol)
    {
      rec.interlaced = false;
    }
  }

  CounterRng rng(seed.trial_key(0x5c0u));
  for (int k = 0; k < 5; k++)
  {
    const double re = radius * (2.0 * rng.uniform() - 1.0);
    double im = radius * (0.05 + 0.95 * rng.uniform());
    if (rng.bit())
    {
      im = -im;
    }
    SchurPoint pt = schur_identity(W, Complex(re, im));
    rec.max_relative_error = std::max(rec.max_relative_error, pt.relative_error);
    rec.schur.push_back(pt);
  }
  rec.diagonal = W(0, 0);
  return rec;
}

}  // namespace rmt
