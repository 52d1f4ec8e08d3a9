#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "rmt/core_linalg.hpp"
#include "rmt/rng.hpp"
#include "rmt/stats.hpp"

namespace rmt
{

struct MatrixPath
{
  std::vector<double> times;
  std::vector<SkewMatrix> snapshots;
};

// W(t) = M0 + G(t) / sqrt(n) with G a real anti-symmetric Brownian motion: every
// upper-triangle entry receives an independent N(0, dt / n) increment per step. The Hermitian
// matrix is iW(t). Snapshots at every `record_every` step and always at T.
MatrixPath matrix_flow(const SkewMatrix &M0, double T, double dt, const Seed &seed, std::size_t record_every = 1);

// e^{-t/2} M0 + (1 - e^{-t})^{1/2} G with G anti-symmetric Gaussian of entry variance 1/n.
SkewMatrix ou_interpolation(const SkewMatrix &M0, double t, const Seed &seed);

enum class SdeVariant
{
  brownian,
  ou,
};

struct SdeOptions
{
  bool noise = true;  // false runs the drift alone
  std::size_t record_every = 1;
  int max_depth = 10;  // substep floor dt / 2^max_depth
};

// Positive eigenvalues lambda_1 < ... < lambda_p of iW for an N x N anti-symmetric W
// (p = floor(N/2)), one vector per recorded time.
struct EigenPath
{
  std::size_t N = 0;
  std::vector<double> times;
  std::vector<Eigen::VectorXd> values;
  std::size_t substeps = 0;  // steps that needed refinement
};

// Euler-Maruyama for
//   d lambda_j = dB_j / sqrt(N) + (1/N) [sum_{l != j} 1/(lambda_j - lambda_l)
//                + sum_{l != j} 1/(lambda_j + lambda_l) + 1/lambda_j (N odd)] dt
// with an extra -lambda_j / (2N) dt in the ou variant. A step is split in two by a Brownian
// bridge when a gap or lambda_1 is below 4 sqrt(h / N) or the step breaks the ordering;
// below the floor a broken ordering throws StepFailure.
EigenPath eigenvalue_sde(const Eigen::VectorXd &lambda0, std::size_t N, double T, double dt, const Seed &seed,
                         SdeVariant variant = SdeVariant::brownian, const SdeOptions &options = {});

struct EigenvectorPath
{
  std::vector<double> times;
  std::vector<SkewSpectrum> states;
  std::size_t substeps = 0;
};

// Joint eigenvalue/eigenvector flow of W(t) = W0 + G(t)/sqrt(N). The noise is drawn in the
// real eigenbasis e_0 = v_0, e_{2j-1} = sqrt2 Re v_j, e_{2j} = sqrt2 Im v_j, so the eigenvalue
// increment of lambda_j is -g_{2j-1,2j} and both flows share one realization. Vectors follow
//   dv_k = sum_{l != +-k} (v_l^* dM v_k) / (lambda_k - lambda_l) v_l
//          - 1/2 sum_{l != +-k} dt / (N (lambda_k - lambda_l)^2) v_k,
// then the real basis is re-orthonormalized, so v_{-k} = conj(v_k) and v_0 stays real.
// Refinement threshold 10 sqrt(h / N).
EigenvectorPath eigenvector_flow(const SkewSpectrum &spec0, double T, double dt, const Seed &seed,
                                 const SdeOptions &options = {});

// Terminal moments of the positive eigenvalues under the matrix flow and under the eigenvalue
// SDE from the same start, over independent paths.
struct DbmComparison
{
  std::size_t n = 0;
  double T = 0.0;
  double dt = 0.0;
  std::size_t paths = 0;
  Eigen::VectorXd lambda0;
  MeanEstimate matrix_sum_sq;  // sum_j lambda_j^2 over positive labels
  MeanEstimate sde_sum_sq;
  MeanEstimate matrix_max;
  MeanEstimate sde_max;
  double expected_sum_sq = 0.0;  // sum lambda0^2 + (n - 1) T / 2
  double z_sum_sq = 0.0;         // difference over combined standard error
  double z_max = 0.0;
};

DbmComparison compare_dbm(const SkewMatrix &M0, double T, double dt, std::size_t paths, const Seed &seed, int jobs = 0);

}  // namespace rmt
