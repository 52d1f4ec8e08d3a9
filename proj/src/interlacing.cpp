#include "rmt/interlacing.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "rmt/errors.hpp"
#include "rmt/parallel.hpp"

namespace rmt
{

namespace
{

constexpr double boundary_guard = 1e-12;

struct Located
{
  double coord;
  Complex root;
  Complex secular;
};

// Gap k of the window covers (values[first + k], values[first + k + 1]).
InterlaceTrial match_window(const Eigen::VectorXd &values, std::size_t first, std::size_t i, std::size_t n_gaps,
                            const std::vector<Located> &roots)
{
  if (n_gaps > 0 && first + i + n_gaps >= static_cast<std::size_t>(values.size()))
  {
    throw InvalidInput("interlacing: gap window exceeds the spectrum");
  }
  InterlaceTrial out;
  out.start = i;
  out.gaps = n_gaps;
  bool all_matched = true;
  bool any_degenerate = false;
  for (std::size_t k = i; k < i + n_gaps; k++)
  {
    GapMatch m;
    m.gap = k;
    m.lower = values(static_cast<Eigen::Index>(first + k));
    m.upper = values(static_cast<Eigen::Index>(first + k + 1));
    const double guard_lo = boundary_guard * std::max(1.0, std::abs(m.lower));
    const double guard_hi = boundary_guard * std::max(1.0, std::abs(m.upper));
    std::size_t on_boundary = 0;
    for (const auto &r : roots)
    {
      if (std::abs(r.coord - m.lower) <= guard_lo || std::abs(r.coord - m.upper) <= guard_hi)
      {
        on_boundary++;
      }
      else if (r.coord > m.lower && r.coord < m.upper)
      {
        m.inside++;
        m.root = r.root;
        out.max_polish_shift = std::max(out.max_polish_shift, std::abs(r.root - r.secular));
      }
    }
    if (m.inside == 1)
    {
      m.outcome = GapOutcome::matched;
    }
    else if (m.inside >= 2)
    {
      m.outcome = GapOutcome::ambiguous;
      m.root.reset();
    }
    else if (on_boundary > 0 || m.upper - m.lower <= guard_hi)
    {
      m.outcome = GapOutcome::boundary_degenerate;
    }
    else
    {
      m.outcome = GapOutcome::empty;
    }
    all_matched = all_matched && m.outcome == GapOutcome::matched;
    any_degenerate = any_degenerate || m.outcome == GapOutcome::boundary_degenerate;
    out.matches.push_back(m);
  }
  const bool any_failure = std::any_of(out.matches.begin(), out.matches.end(), [](const GapMatch &m) {
    return m.outcome == GapOutcome::empty || m.outcome == GapOutcome::ambiguous;
  });
  out.interlaced = all_matched;
  out.boundary_degenerate = any_degenerate && !any_failure;
  return out;
}

std::string first_failure(const PerturbedSpectrum &ps)
{
  return ps.failures.empty() ? std::string() : ps.failures.front().reason;
}

struct TournamentSolve
{
  SkewSpectrum spec;
  PerturbedSpectrum roots;
};

TournamentSolve solve_tournament(const TournamentMatrix &D)
{
  TournamentSolve out;
  out.spec = eigen_skew(tournament_to_skew(D));
  const SecularFunction f = build_secular(out.spec);
  out.roots = solve_perturbed(f, out.spec, shifted_tournament(D).cast<Complex>());
  return out;
}

double real_root_of(const PerturbedSpectrum &ps)
{
  for (const auto &r : ps.roots)
  {
    if (r.tag == RootTag::real_root)
    {
      return r.value.real();
    }
  }
  throw StructuralError("no real root in perturbed spectrum");
}

std::size_t draw_index(const Seed &seed, std::size_t t, std::size_t lo, std::size_t hi)
{
  CounterRng rng(splitmix64_mix(seed.trial_key(t) ^ 0x1dc0ffeeULL));
  return static_cast<std::size_t>(rng.uniform_int(lo, hi));
}

void aggregate(InterlaceReport &rep)
{
  std::size_t valid = 0;
  std::size_t strict_pool = 0;
  std::size_t interlaced = 0;
  std::size_t re_ok = 0;
  std::size_t real_ok = 0;
  std::vector<double> real_devs;
  rep.re_tolerance = std::pow(static_cast<double>(rep.n), -rep.options.re_exponent);
  for (const auto &r : rep.records)
  {
    if (!r.ok)
    {
      rep.solver_failures++;
      continue;
    }
    valid++;
    if (r.boundary_degenerate)
    {
      rep.degenerate++;
    }
    else
    {
      strict_pool++;
      interlaced += r.interlaced ? 1 : 0;
    }
    const bool ambiguous = std::any_of(r.matches.begin(), r.matches.end(),
                                       [](const GapMatch &m) { return m.outcome == GapOutcome::ambiguous; });
    rep.ambiguous += ambiguous ? 1 : 0;
    re_ok += r.max_re_deviation <= rep.re_tolerance ? 1 : 0;
    real_ok += r.real_root_deviation <= rep.options.real_root_scale ? 1 : 0;
    real_devs.push_back(r.real_root_deviation);
  }
  rep.interlace_rate = wilson_interval(interlaced, strict_pool);
  rep.re_within_rate = wilson_interval(re_ok, valid);
  rep.real_root_rate = wilson_interval(real_ok, valid);
  rep.median_real_root_deviation = real_devs.empty() ? 0.0 : median(real_devs);
}

std::pair<std::size_t, std::size_t> bulk_window(double alpha, double extent, std::size_t n_gaps, std::size_t gap_count)
{
  if (!(alpha > 0.0 && alpha < 0.5))
  {
    throw InvalidInput("interlacing: alpha must lie in (0, 1/2)");
  }
  if (n_gaps > gap_count)
  {
    throw InvalidInput("interlacing: more gaps requested than the spectrum has");
  }
  const auto lo = static_cast<std::size_t>(std::ceil(alpha * extent));
  auto hi = static_cast<std::size_t>(std::floor((1.0 - alpha) * extent));
  hi = std::min(hi, gap_count - n_gaps);
  if (lo > hi)
  {
    throw InvalidInput("interlacing: bulk window is empty for this n, alpha and gap count");
  }
  return {lo, hi};
}

}  // namespace

const char *to_string(GapOutcome outcome)
{
  switch (outcome)
  {
  case GapOutcome::matched:
    return "matched";
  case GapOutcome::boundary_degenerate:
    return "boundary-degenerate";
  case GapOutcome::empty:
    return "empty";
  case GapOutcome::ambiguous:
    return "ambiguous";
  }
  return "unknown";
}

std::size_t positive_gap_count(std::size_t n)
{
  if (n < 2)
  {
    return 0;
  }
  return n % 2 == 1 ? (n - 1) / 2 : n / 2 - 1;
}

InterlaceTrial match_gaps(const Eigen::VectorXd &poles, std::size_t first_position, std::size_t i, std::size_t n_gaps,
                          const std::vector<Complex> &roots)
{
  std::vector<Located> located;
  for (const auto &s : roots)
  {
    located.push_back({s.imag(), s, s});
  }
  return match_window(poles, first_position, i, n_gaps, located);
}

InterlaceTrial check_interlacing_once(const TournamentMatrix &D, std::size_t i, std::size_t n_gaps)
{
  const std::size_t n = D.size();
  if (i + n_gaps > positive_gap_count(n))
  {
    throw InvalidInput("check_interlacing_once: window outside the positive gaps");
  }
  if (n_gaps == 0)
  {
    InterlaceTrial empty;
    empty.start = i;
    empty.interlaced = true;
    return empty;
  }
  const TournamentSolve sol = solve_tournament(D);
  InterlaceTrial out;
  if (!sol.roots.failures.empty())
  {
    out.ok = false;
    out.error = first_failure(sol.roots);
    out.start = i;
    out.gaps = n_gaps;
    return out;
  }
  std::vector<Located> located;
  for (const auto &r : sol.roots.roots)
  {
    located.push_back({r.value.imag(), r.value, r.secular_value});
  }
  out = match_window(sol.spec.values, n / 2, i, n_gaps, located);
  for (const auto &m : out.matches)
  {
    if (m.root)
    {
      // Re lambda(D) + 1/2 = Re s / 2.
      out.max_re_deviation = std::max(out.max_re_deviation, std::abs(m.root->real()) / 2.0);
    }
  }
  out.real_root_deviation =
    std::abs(real_root_of(sol.roots) - static_cast<double>(n)) / std::sqrt(static_cast<double>(n));
  return out;
}

double check_real_root(const TournamentMatrix &D)
{
  const std::size_t n = D.size();
  if (n % 2 == 0)
  {
    throw InvalidInput("check_real_root: n must be odd");
  }
  const SkewSpectrum spec = eigen_skew(tournament_to_skew(D));
  const SecularFunction f = build_secular(spec);
  const PerturbedSpectrum newton_roots = solve_secular_roots(f);
  const double s0 = real_root_of(newton_roots);
  const auto polished = refine_eigenpair(shifted_tournament(D).cast<Complex>(), Complex(s0, 0.0));
  return std::abs(polished.value.real() - static_cast<double>(n)) / std::sqrt(static_cast<double>(n));
}

InterlaceTrial check_gue_once(const HermitianMatrix &G, const Eigen::VectorXd &direction, double strength, std::size_t i,
                              std::size_t n_gaps)
{
  const std::size_t n = G.size();
  if (n < 2 || i + n_gaps > n - 1)
  {
    throw InvalidInput("check_gue_once: window outside the spectrum");
  }
  const RankOnePerturbedModel model(G, direction, strength);
  const HermitianSpectrum hs = eigen_hermitian(G);
  const SecularFunction f = build_secular_rank_one(hs, direction, strength);
  const Eigen::MatrixXcd A = Complex(0.0, -1.0) * model.dense();
  const PerturbedSpectrum ps = solve_perturbed(f, A);
  InterlaceTrial out;
  if (!ps.failures.empty())
  {
    out.ok = false;
    out.error = first_failure(ps);
    out.start = i;
    out.gaps = n_gaps;
    return out;
  }
  std::vector<Located> located;
  double outlier = 0.0;
  for (const auto &r : ps.roots)
  {
    // z = i s.
    const Complex z = Complex(0.0, 1.0) * r.value;
    located.push_back({z.real(), z, Complex(0.0, 1.0) * r.secular_value});
    if (r.tag == RootTag::real_root)
    {
      outlier = z.imag();
    }
  }
  out = match_window(hs.values, 0, i, n_gaps, located);
  for (const auto &m : out.matches)
  {
    if (m.root)
    {
      out.max_re_deviation = std::max(out.max_re_deviation, std::abs(m.root->imag()));
    }
  }
  out.real_root_deviation = std::abs(outlier - strength) / std::sqrt(static_cast<double>(n));
  return out;
}

InterlaceReport run_interlace_experiment(std::size_t n, std::size_t trials, const InterlaceOptions &options,
                                         const Seed &seed)
{
  InterlaceReport rep;
  rep.ensemble = "tournament";
  rep.n = n;
  rep.trials = trials;
  rep.options = options;
  rep.seed = seed;
  if (trials == 0)
  {
    aggregate(rep);
    return rep;
  }
  const std::size_t gap_count = positive_gap_count(n);
  std::pair<std::size_t, std::size_t> window{0, 0};
  if (options.fixed_index)
  {
    if (*options.fixed_index + options.n_gaps > gap_count)
    {
      throw InvalidInput("run_interlace_experiment: fixed index outside the positive gaps");
    }
  }
  else
  {
    window = bulk_window(options.alpha, (static_cast<double>(n) - 1.0) / 2.0, options.n_gaps, gap_count);
  }
  rep.records.resize(trials);
  parallel_for(trials, resolve_jobs(options.jobs), [&](std::size_t t) {
    const std::size_t i = options.fixed_index ? *options.fixed_index : draw_index(seed, t, window.first, window.second);
    InterlaceTrial rec;
    try
    {
      rec = check_interlacing_once(sample_tournament(n, seed.substream(t)), i, options.n_gaps);
    }
    catch (const NumericalError &e)
    {
      rec.ok = false;
      rec.error = e.what();
      rec.start = i;
      rec.gaps = options.n_gaps;
    }
    rec.trial = t;
    rep.records[t] = std::move(rec);
  });
  aggregate(rep);
  return rep;
}

InterlaceReport run_gue_variant(std::size_t n, std::size_t trials, const InterlaceOptions &options, const Seed &seed)
{
  if (n < 4)
  {
    throw InvalidInput("run_gue_variant: n must be at least 4");
  }
  InterlaceReport rep;
  rep.ensemble = "gue";
  rep.n = n;
  rep.trials = trials;
  rep.options = options;
  rep.seed = seed;
  if (trials == 0)
  {
    aggregate(rep);
    return rep;
  }
  const std::size_t gap_count = n - 1;
  std::pair<std::size_t, std::size_t> window{0, 0};
  if (options.fixed_index)
  {
    if (*options.fixed_index + options.n_gaps > gap_count)
    {
      throw InvalidInput("run_gue_variant: fixed index outside the spectrum");
    }
  }
  else
  {
    window = bulk_window(options.alpha, static_cast<double>(n), options.n_gaps, gap_count);
  }
  rep.records.resize(trials);
  parallel_for(trials, resolve_jobs(options.jobs), [&](std::size_t t) {
    const std::size_t i = options.fixed_index ? *options.fixed_index : draw_index(seed, t, window.first, window.second);
    const Seed sub = seed.substream(t);
    InterlaceTrial rec;
    try
    {
      const HermitianMatrix G = sample_gue(n, sub);
      const Eigen::VectorXd b = sample_unit_vector(n, Seed{sub.master, sub.stream + 1});
      rec = check_gue_once(G, b, static_cast<double>(n), i, options.n_gaps);
    }
    catch (const NumericalError &e)
    {
      rec.ok = false;
      rec.error = e.what();
      rec.start = i;
      rec.gaps = options.n_gaps;
    }
    rec.trial = t;
    rep.records[t] = std::move(rec);
  });
  aggregate(rep);
  return rep;
}

std::vector<double> run_real_root_experiment(std::size_t n, std::size_t trials, const Seed &seed, int jobs)
{
  std::vector<double> out(trials);
  parallel_for(trials, resolve_jobs(jobs),
               [&](std::size_t t) { out[t] = check_real_root(sample_tournament(n, seed.substream(t))); });
  return out;
}

}  // namespace rmt
