#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rmt/core_linalg.hpp"
#include "rmt/ensembles.hpp"
#include "rmt/rng.hpp"
#include "rmt/secular.hpp"
#include "rmt/stats.hpp"

namespace rmt
{

enum class GapOutcome
{
  matched,              // exactly one root strictly inside
  boundary_degenerate,  // no root inside, one on a boundary (or zero-width gap)
  empty,
  ambiguous,            // two or more roots inside
};

const char *to_string(GapOutcome outcome);

struct GapMatch
{
  std::size_t gap = 0;  // index among the positive gaps
  double lower = 0.0;
  double upper = 0.0;
  GapOutcome outcome = GapOutcome::empty;
  std::optional<Complex> root;  // eigenvalue of the perturbed matrix matched to this gap
  std::size_t inside = 0;
};

struct InterlaceTrial
{
  std::size_t trial = 0;
  bool ok = true;  // false when the solver failed; then only `error` is meaningful
  std::string error;
  std::size_t start = 0;
  std::size_t gaps = 0;
  bool interlaced = false;
  bool boundary_degenerate = false;
  std::vector<GapMatch> matches;
  // Tournament: max |Re lambda(D) + 1/2| over matched roots. GUE variant: max |Im z| of the
  // matched eigenvalues z of G + i N b b^T.
  double max_re_deviation = 0.0;
  // |s - n| / sqrt(n) for the real root s of 2D + I (|Im z - N| / sqrt(n) for the GUE variant).
  double real_root_deviation = 0.0;
  // Largest shift between a matched root's Newton value and its inverse-iteration value.
  double max_polish_shift = 0.0;
};

// Positive gaps of a tournament spectrum: gap k is (values[p + k], values[p + k + 1]) with p the
// position of the smallest nonnegative eigenvalue, k = 0..positive_gap_count - 1.
std::size_t positive_gap_count(std::size_t n);

// Im lambda_k(D) = Im s / 2 tested against (lambda_k(M)/2, lambda_{k+1}(M)/2) for the n_gaps
// positive gaps starting at gap i; each gap is matched to the unique root strictly inside.
// Hits within 1e-12 of a boundary are boundary-degenerate.
InterlaceTrial check_interlacing_once(const TournamentMatrix &D, std::size_t i, std::size_t n_gaps);

// Matching step on precomputed roots of 2D + I (eigenvalues s, not lambda(D)).
InterlaceTrial match_gaps(const Eigen::VectorXd &poles, std::size_t first_position, std::size_t i, std::size_t n_gaps,
                          const std::vector<Complex> &roots);

// |(2 lambda_0(D) + 1) - n| / sqrt(n) with lambda_0(D) the real eigenvalue; n odd.
double check_real_root(const TournamentMatrix &D);

// GUE variant on a single sample: eigenvalues z of G + i strength b b^T, tested
// lambda_{i+k}(G) < Re z < lambda_{i+k+1}(G) over ascending positions i..i+n_gaps-1.
InterlaceTrial check_gue_once(const HermitianMatrix &G, const Eigen::VectorXd &direction, double strength, std::size_t i,
                              std::size_t n_gaps);

struct InterlaceOptions
{
  double alpha = 0.25;
  std::size_t n_gaps = 5;
  std::optional<std::size_t> fixed_index;  // otherwise uniform per trial over the bulk window
  double re_exponent = 0.8;                 // Re-part tolerance n^-re_exponent
  double real_root_scale = 10.0;            // |s - n| <= scale sqrt(n)
  int jobs = 0;
};

struct InterlaceReport
{
  std::string ensemble;  // "tournament" or "gue"
  std::size_t n = 0;
  std::size_t trials = 0;
  InterlaceOptions options;
  Seed seed;
  std::vector<InterlaceTrial> records;

  std::size_t solver_failures = 0;
  std::size_t degenerate = 0;
  std::size_t ambiguous = 0;  // trials with a gap holding two or more roots
  ProportionEstimate interlace_rate;   // interlaced / (valid non-degenerate trials)
  ProportionEstimate re_within_rate;   // max_re_deviation <= n^-re_exponent, over valid trials
  ProportionEstimate real_root_rate;   // real_root_deviation <= real_root_scale, over valid trials
  double median_real_root_deviation = 0.0;
  double re_tolerance = 0.0;
};

// Trials are independent tournaments drawn from seed.substream(t); aggregation does not depend
// on the order in which trials finish.
InterlaceReport run_interlace_experiment(std::size_t n, std::size_t trials, const InterlaceOptions &options,
                                         const Seed &seed);

// G from sample_gue, b uniform on the sphere, strength n. Requires n >= 4.
InterlaceReport run_gue_variant(std::size_t n, std::size_t trials, const InterlaceOptions &options, const Seed &seed);

// Real-root deviations |s - n| / sqrt(n) over independent tournaments.
std::vector<double> run_real_root_experiment(std::size_t n, std::size_t trials, const Seed &seed, int jobs = 0);

}  // namespace rmt
