#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rmt/core_linalg.hpp"

namespace rmt
{

// F(s) = sum_j w_j / (s - i lambda_j).
//
// For the tournament problem the poles are the eigenvalues of M = iW and w_j = |<1, v_j>|^2;
// the eigenvalues of 2D + I are then the solutions of F(s) = 1. Any rank-one update
// B + c b b^T of a normal B with eigenvalues -i lambda_j fits the same form.
struct SecularFunction
{
  Eigen::VectorXd poles;    // ascending
  Eigen::VectorXd weights;  // nonnegative, same order as poles
  bool symmetric = false;   // poles and weights mirrored about zero

  std::size_t size() const { return static_cast<std::size_t>(poles.size()); }
  double total_weight() const { return weights.sum(); }

  // Weights at or below this are treated as exactly zero overlaps (1e-12 n).
  double weight_tolerance() const { return 1e-12 * static_cast<double>(size()); }
};

// Weights |sum_a v_j(a)|^2 from a spectrum computed with eigenvectors.
SecularFunction build_secular(const SkewSpectrum &spec);

// Poles and weights for the eigenvalues s of -i(G + i c b b^T) = -iG + c b b^T, with G
// Hermitian: poles -lambda_j(G) (ascending), weights c |<u_j, b>|^2. An eigenvalue z of
// G + i c b b^T corresponds to s = -i z, so Re z = -Im s.
SecularFunction build_secular_rank_one(const HermitianSpectrum &G, const Eigen::VectorXd &direction, double strength);

// Direct sum for complex s; the paired form w_0/s + 2s sum w_j/(s^2 + lambda_j^2) on the
// real axis of a symmetric function. Throws PoleProximity within 1e-14 max|lambda| of a pole.
Complex eval_F(const SecularFunction &f, Complex s);
Complex eval_F_direct(const SecularFunction &f, Complex s);
Complex eval_F_paired(const SecularFunction &f, Complex s);

// F'(s) = -sum_j w_j / (s - i lambda_j)^2.
Complex eval_F_derivative(const SecularFunction &f, Complex s);

struct MuResult
{
  bool skipped = false;     // degenerate overlap or coincident poles
  double value = 0.0;       // zero of F(it) in (lambda_j, lambda_{j+1})
  double g_residual = 0.0;  // |sum w / (mu - lambda)|
  int iterations = 0;
};

// Bisection for the zero of g(t) = -Im F(it) = sum_j w_j / (t - lambda_j) between the poles
// at positions j and j+1. Throws SecularAnomaly if the bracket does not change sign.
MuResult find_mu(const SecularFunction &f, std::size_t j);

// One entry per interval (lambda_j, lambda_{j+1}), j = 0..n-2.
std::vector<MuResult> secular_zeros(const SecularFunction &f);

enum class RootTag
{
  secular_newton,
  persisted,
  real_root,
};

const char *to_string(RootTag tag);

struct PerturbedRoot
{
  Complex value;           // polished by inverse iteration when polishing ran
  Complex secular_value;   // Newton (or persisted) value before polishing
  RootTag tag = RootTag::secular_newton;
  double residual = -1.0;  // inverse-iteration residual; negative when not polished
  long interval_index = -1;  // lower pole position (interval roots) or pole position (persisted)
  bool converged = true;
};

struct RootFailure
{
  long interval_index = -1;
  std::string reason;
};

// Roots of F(s) = 1 plus the eigenvalues left in place by zero overlaps: the full spectrum
// of the rank-one perturbed matrix, sorted by imaginary then real part.
struct PerturbedSpectrum
{
  std::vector<PerturbedRoot> roots;
  std::vector<RootFailure> failures;

  std::size_t size() const { return roots.size(); }
  Complex sum() const;
  std::vector<Complex> values() const;
  std::vector<Complex> secular_values() const;
};

struct SolveOptions
{
  bool polish = true;
  int newton_max_iterations = 60;
  double newton_tolerance = 1e-10;  // |F(s) - 1|
};

// Outlier root by Newton from s = total weight (real Newton for symmetric functions), one
// root per interval between consecutive active poles by Newton from i mu + 1/F'(i mu),
// persisted roots i lambda for zero-overlap directions, then every root polished against A.
// Symmetric functions solve the upper half and conjugate.
PerturbedSpectrum solve_perturbed(const SecularFunction &f, const Eigen::MatrixXcd &A, const SolveOptions &options = {});
PerturbedSpectrum solve_perturbed(const SecularFunction &f, const ShiftInvertRefiner &refiner, const SolveOptions &options = {});
PerturbedSpectrum solve_perturbed(const SecularFunction &f, const SkewSpectrum &spec, const Eigen::MatrixXcd &A,
                                  const SolveOptions &options = {});

// Newton-only solve (no inverse-iteration polishing).
PerturbedSpectrum solve_secular_roots(const SecularFunction &f, const SolveOptions &options = {});

// Bulk separation of the zeros: min(mu_j - lambda_j, lambda_{j+1} - mu_j) * sqrt(n) for
// positions j in [alpha n, (1 - alpha) n]; skipped intervals are omitted.
std::vector<double> bulk_separations(const SecularFunction &f, double alpha);

}  // namespace rmt
