#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "rmt/core_linalg.hpp"
#include "rmt/rng.hpp"

namespace rmt
{

// Round-robin outcome matrix: D_ii = 0 and D_ij = 1 - D_ji. The bits D_ij with i < j are
// stored row by row.
class TournamentMatrix
{
public:
  TournamentMatrix() = default;
  TournamentMatrix(std::size_t n, std::vector<std::uint8_t> upper_bits);

  // Validates the tournament constraints exactly.
  static TournamentMatrix from_dense(const Eigen::MatrixXi &D);

  std::size_t size() const { return n_; }
  int operator()(std::size_t i, std::size_t j) const;
  Eigen::MatrixXi dense() const;

  bool operator==(const TournamentMatrix &) const = default;

private:
  std::size_t n_ = 0;
  std::vector<std::uint8_t> upper_;
};

// The 3-cycle tournament 1 -> 2 -> 3 -> 1 (D_12 = D_23 = D_31 = 1).
TournamentMatrix cyclic_tournament3();

// Every bit independent and uniform; bits are drawn in row-major upper-triangle order.
TournamentMatrix sample_tournament(std::size_t n, const Seed &seed);

// W_ij = 2 D_ij - 1 off the diagonal, so that M = iW = 2iD - i(J - I).
SkewMatrix tournament_to_skew(const TournamentMatrix &D);

// 2D + I as a dense real matrix; its eigenvalues are 2 lambda(D) + 1.
Eigen::MatrixXd shifted_tournament(const TournamentMatrix &D);

// Uniform +-1 anti-symmetric matrix. Consumes the same bits as sample_tournament, so
// sample_skew_pm1(n, s) == tournament_to_skew(sample_tournament(n, s)).
SkewMatrix sample_skew_pm1(std::size_t n, const Seed &seed);

// Upper-triangle entries i.i.d. N(0, scale^2).
SkewMatrix sample_skew_gaussian(std::size_t n, const Seed &seed, double scale = 1.0);

// Diagonal N(0, 1); off-diagonal (x + iy)/sqrt(2) with x, y ~ N(0, 1), so E|G_ij|^2 = 1.
HermitianMatrix sample_gue(std::size_t n, const Seed &seed);

// Normalized Gaussian vector: uniform on the unit sphere of R^n.
Eigen::VectorXd sample_unit_vector(std::size_t n, const Seed &seed);

// base + i * strength * b b^T with b a real unit vector.
struct RankOnePerturbedModel
{
  RankOnePerturbedModel(HermitianMatrix base, Eigen::VectorXd direction, double strength);

  HermitianMatrix base;
  Eigen::VectorXd direction;
  double strength;

  Eigen::MatrixXcd dense() const;
};

// Matrix CSV: a "# skew n=<n>" or "# tournament n=<n>" header, then rows i = 1..n-1 holding
// the strict lower triangle. Floats use the shortest round-trip decimal.
void write_skew_csv(std::ostream &os, const SkewMatrix &W);
SkewMatrix read_skew_csv(std::istream &is);
void write_tournament_csv(std::ostream &os, const TournamentMatrix &D);
TournamentMatrix read_tournament_csv(std::istream &is);

}  // namespace rmt
