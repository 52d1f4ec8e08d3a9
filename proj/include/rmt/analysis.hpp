#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rmt/core_linalg.hpp"
#include "rmt/rng.hpp"
#include "rmt/stats.hpp"

namespace rmt
{

// Stieltjes transform of the semicircle on [-2, 2]: the root of m^2 + z m + 1 = 0 with
// Im m > 0. Throws InvalidInput when Im z <= 0.
Complex m_sc(Complex z);

double semicircle_density(double x);
double semicircle_cdf(double x);
// Law of |x| under the semicircle, on [0, 2].
double quarter_circle_cdf(double x);

// (1/n) sum_j 1 / (lambda_j / sqrt(n) - z).
Complex empirical_stieltjes(const Eigen::VectorXd &values, Complex z);

struct StieltjesPoint
{
  double energy = 0.0;
  double eta = 0.0;
  Complex empirical;
  Complex limit;
  double deviation = 0.0;
  // Solves deviation = 1 / (n^{1 - eps} eta); NaN when n == 1 or the deviation is 0.
  double epsilon = 0.0;
};

struct StieltjesScan
{
  std::size_t n = 0;
  std::vector<StieltjesPoint> points;  // energy-major
};

StieltjesScan local_law_scan(const SkewSpectrum &spec, const std::vector<double> &energies,
                             const std::vector<double> &etas);

// Rescaled +-1 spectra against the semicircle: KS distance per trial.
struct SemicircleReport
{
  std::size_t n = 0;
  std::size_t trials = 0;
  std::vector<double> ks;
  double mean_ks = 0.0;
};

SemicircleReport run_semicircle(std::size_t n, std::size_t trials, const Seed &seed, int jobs = 0);

// +-1 spectra at z = E + i n^{-eta_exponent}; a pair passes when |m_N - m_sc| <= n^{-threshold_exponent}.
struct LocalLawReport
{
  std::size_t n = 0;
  std::size_t trials = 0;
  std::vector<double> energies;
  double eta = 0.0;
  double threshold = 0.0;
  std::vector<double> deviations;  // trial-major
  ProportionEstimate within;
};

LocalLawReport run_local_law(std::size_t n, std::size_t trials, const std::vector<double> &energies, const Seed &seed,
                             int jobs = 0, double eta_exponent = 0.5, double threshold_exponent = 0.4);

// gamma with quarter_circle_cdf(gamma) = fraction, by bisection to 1e-10.
double classical_location(double fraction);
// gamma_1..gamma_{n_pos} for fractions j / n_pos.
std::vector<double> classical_locations(std::size_t n_pos);

struct RigidityRecord
{
  double max_deviation = 0.0;
  long argmax = 0;  // positive label
  long first = 0;
  long last = 0;
};

// max over bulk positive labels j of |lambda_j / sqrt(n) - gamma_j|, with gamma[j - 1] for label
// j and the bulk taken as j in [ceil(alpha p), floor((1 - alpha) p)].
RigidityRecord rigidity_report(const SkewSpectrum &spec, const std::vector<double> &gamma, double alpha = 0.25);

struct RigidityExperiment
{
  std::size_t n = 0;
  std::size_t trials = 0;
  double threshold = 0.0;
  std::vector<double> max_deviations;
  ProportionEstimate within;
  double median = 0.0;
  double q90 = 0.0;
};

RigidityExperiment run_rigidity(std::size_t n, std::size_t trials, const Seed &seed, int jobs = 0,
                                double threshold_exponent = 0.9, double alpha = 0.25);

enum class GapEnsemble
{
  pm1,
  gaussian,
};

enum class GapObservable
{
  bump,    // exp(1 - 1 / (1 - u^2)), u = (g - 1) / 1, support (0, 2)
  cosine,  // cos^2(pi u / 2) on the same support
};

enum class GapScale
{
  raw,      // sqrt(n) (lambda_{k+1} - lambda_k)
  density,  // sqrt(n) rho_sc(gamma_k) (lambda_{k+1} - lambda_k), unit mean spacing
};

std::string to_string(GapEnsemble e);
std::string to_string(GapObservable o);
GapEnsemble parse_gap_ensemble(const std::string &s);
GapObservable parse_gap_observable(const std::string &s);

double gap_observable(GapObservable o, double g);

struct GapOptions
{
  GapEnsemble ensemble_a = GapEnsemble::pm1;
  GapEnsemble ensemble_b = GapEnsemble::gaussian;
  std::size_t size_a = 201;
  std::size_t size_b = 201;  // n or n - 1 for the comparison ensemble
  double bulk_fraction = 0.5;
  std::size_t window = 1;  // consecutive gaps averaged per trial
  GapObservable observable = GapObservable::bump;
  GapScale scale = GapScale::density;
  Seed seed_a{};
  Seed seed_b{0, 1};
  int jobs = 0;
};

struct GapSide
{
  std::string ensemble;
  std::size_t n = 0;
  long first_gap = 0;  // positive label k of the first gap (lambda_k, lambda_{k+1})
  std::vector<double> raw_gaps;
  std::vector<double> density_gaps;
  std::vector<double> observable;  // per trial
  MeanEstimate estimate;
};

struct GapComparison
{
  GapSide a;
  GapSide b;
  double difference = 0.0;
  double combined_std_error = 0.0;
  double z_score = 0.0;  // 0 when the combined error vanishes
};

GapComparison gap_statistics(std::size_t trials, const GapOptions &options);

struct OverlapReport
{
  std::size_t n = 0;
  std::size_t trials = 0;
  std::vector<long> labels;
  std::vector<double> samples;       // sqrt(2n) |<q, v_j>| over positive labels, trial-major
  std::vector<double> zero_samples;  // sqrt(n) |<q, v_0>| for odd n, kept apart
  double ks = 0.0;                   // against 1 - exp(-x^2 / 2)
};

double rayleigh_cdf(double x);

// +-1 matrices; q must be a unit vector to 1e-12.
OverlapReport overlap_experiment(std::size_t n, std::size_t trials, const Eigen::VectorXd &q,
                                 const std::vector<long> &labels, const Seed &seed, int jobs = 0);

// Labels spread evenly over the bulk window [ceil(alpha p), floor((1 - alpha) p)].
std::vector<long> bulk_labels(std::size_t n, std::size_t count, double alpha = 0.25);

struct SchurPoint
{
  Complex s;
  Complex direct;  // 1 / R_11(s)
  Complex formula; // M_11 - s - sum_j |<v_j, h>|^2 / (mu_j - s)
  double relative_error = 0.0;
};

struct MinorRecord
{
  std::size_t n = 0;
  Eigen::VectorXd values;        // spectrum of M = iW
  Eigen::VectorXd minor_values;  // spectrum of the minor without row and column 1
  bool interlaced = false;
  double max_violation = 0.0;
  double diagonal = 0.0;  // M_11, zero for skew input
  std::vector<SchurPoint> schur;
  double max_relative_error = 0.0;
};

// Both sides of the Schur-complement identity at one non-real s.
SchurPoint schur_identity(const SkewMatrix &W, Complex s);

// Cauchy interlacing mu_i <= nu_i <= mu_{i+1} to 1e-10 (scaled by the spectral radius) and the
// Schur-complement identity for R_11 at 5 random non-real s.
MinorRecord minor_consistency(const SkewMatrix &W, const Seed &seed = {});

}  // namespace rmt
