#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace rmt
{

using Complex = std::complex<double>;

// Real anti-symmetric matrix W (W = -W^T, zero diagonal). Only the strict lower triangle
// is stored, row by row: entry (i, j) with i > j lives at i * (i - 1) / 2 + j.
class SkewMatrix
{
public:
  SkewMatrix() = default;
  explicit SkewMatrix(std::size_t n);
  SkewMatrix(std::size_t n, std::vector<double> lower);

  // Requires exact antisymmetry and a zero diagonal.
  static SkewMatrix from_dense(const Eigen::MatrixXd &W);

  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const;
  std::span<const double> lower() const { return lower_; }
  Eigen::MatrixXd dense() const;

  // Sum of squared off-diagonal entries, i.e. -tr(W^2).
  double frobenius_norm_squared() const;

  static std::size_t packed_index(std::size_t i, std::size_t j) { return i * (i - 1) / 2 + j; }

  bool operator==(const SkewMatrix &) const = default;

private:
  std::size_t n_ = 0;
  std::vector<double> lower_;
};

// Complex Hermitian matrix; upper triangle stored row by row, diagonal kept real.
class HermitianMatrix
{
public:
  HermitianMatrix() = default;
  explicit HermitianMatrix(std::size_t n);

  // Uses the upper triangle and the real part of the diagonal of H.
  static HermitianMatrix from_dense(const Eigen::MatrixXcd &H);

  std::size_t size() const { return n_; }
  Complex operator()(std::size_t i, std::size_t j) const;
  void set(std::size_t i, std::size_t j, Complex value);  // i <= j; diagonal must be real
  Eigen::MatrixXcd dense() const;

private:
  std::size_t index(std::size_t i, std::size_t j) const { return i * n_ - i * (i - 1) / 2 + (j - i); }

  std::size_t n_ = 0;
  std::vector<Complex> upper_;
};

// Spectrum of the Hermitian matrix M = iW for real skew W.
//
// Signed labels run over -(n-1)/2..(n-1)/2 for odd n and over +-1..+-n/2 for even n;
// columns are stored in ascending eigenvalue order. The pairing lambda_{-j} = -lambda_j
// and v_{-j} = conj(v_j) holds exactly, and v_0 is real.
struct SkewSpectrum
{
  std::size_t n = 0;
  Eigen::VectorXd values;    // ascending
  Eigen::MatrixXcd vectors;  // n x n, or empty for a values-only solve

  bool has_vectors() const { return vectors.size() != 0; }
  bool has_zero_mode() const { return n % 2 == 1; }
  long positive_count() const { return static_cast<long>(n / 2); }

  // Column of signed label j.
  std::size_t position(long j) const;
  long label(std::size_t position) const;

  double lambda(long j) const { return values(static_cast<Eigen::Index>(position(j))); }
  Eigen::VectorXcd vector(long j) const { return vectors.col(static_cast<Eigen::Index>(position(j))); }
};

enum class SpectrumJob
{
  values_only,
  values_and_vectors,
};

// Householder reduction to skew-tridiagonal form, a diagonal unitary turning it into a real
// symmetric tridiagonal with zero diagonal, implicit-shift QL, then back-transformation.
SkewSpectrum eigen_skew(const SkewMatrix &W, SpectrumJob job = SpectrumJob::values_and_vectors);

struct HermitianSpectrum
{
  Eigen::VectorXd values;  // ascending
  Eigen::MatrixXcd vectors;
};

HermitianSpectrum eigen_hermitian(const HermitianMatrix &H);
HermitianSpectrum eigen_hermitian(const Eigen::MatrixXcd &H);

struct RefinedEigenpair
{
  Complex value;
  Eigen::VectorXcd vector;
  double residual = 0.0;  // ||A v - s v||_2 with ||v|| = 1
  int iterations = 0;
  bool shift_perturbed = false;
};

// Rayleigh-quotient inverse iteration on a cached Hessenberg form of A, so every refinement
// after construction costs O(n^2). Stops once ||A v - s v|| <= 1e-10 ||A||_F.
class ShiftInvertRefiner
{
public:
  explicit ShiftInvertRefiner(const Eigen::MatrixXcd &A);

  RefinedEigenpair refine(Complex s0) const;

  double frobenius_norm() const { return norm_a_; }
  const Eigen::MatrixXcd &matrix() const { return a_; }

  static constexpr int max_iterations = 100;
  static constexpr double relative_tolerance = 1e-10;

private:
  Eigen::MatrixXcd a_;
  Eigen::MatrixXcd hess_;
  Eigen::MatrixXcd q_;
  double norm_a_ = 0.0;
};

// One-shot form of ShiftInvertRefiner.
RefinedEigenpair refine_eigenpair(const Eigen::MatrixXcd &A, Complex s0);

}  // namespace rmt
