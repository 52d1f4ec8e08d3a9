#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace rmt
{

// Probabilists' monic Hermite polynomial by P_{k+1} = x P_k - k P_{k-1}. Throws
// NumericalError when the value overflows; use psi() for large orders.
double hermite_monic(int k, double x);

// psi_k(x) = P_k(x) e^{-x^2/4} / (sqrt(2 pi) k!)^{1/2}, orthonormal on the real line,
// evaluated by the normalized three-term recurrence.
double psi(int k, double x);

// psi_0(x), ..., psi_kmax(x).
Eigen::VectorXd psi_all(int kmax, double x);

// Kernel of the positive eigenvalues of the N x N Gaussian anti-symmetric model:
// 2 sum psi_j(x) psi_j(y) over odd j = 1, 3, ..., N - 2. N odd, N >= 3.
double kernel_KN(int N, double x, double y);

Eigen::MatrixXd kernel_matrix(int N, const std::vector<double> &grid);

// Integral of kernel_KN(N, x, x) over the line (composite Gauss-Legendre, 64 nodes per
// unit length, on a window covering the spectrum); equals N - 1.
double kernel_diagonal_integral(int N);

// Unnormalized log density of the (N-1)/2 positive eigenvalues:
// 2 sum_{i<j} log|l_i^2 - l_j^2| + sum_i (2 log l_i - l_i^2 / 2). Coincident or zero
// values give -infinity.
double joint_density_log(int N, const std::vector<double> &lambdas);

struct CorrelationDet
{
  double determinant = 0.0;  // det(K(x_i, x_j))
  double prefactor = 0.0;    // (N - k)! / N!
  double value() const { return prefactor * determinant; }
};

CorrelationDet correlation_det(int N, const std::vector<double> &points);

enum class LimitRegime
{
  origin,
  bulk,
};

// Comparison of the kernel against its scaling limit at scaled points (X, Y).
//
// origin: x = X / sqrt(N-1); normalized kernel pi K / sqrt(N-1); limit
//   sin(X-Y)/(X-Y) - sin(X+Y)/(X+Y).
// bulk at energy E in (0, 2): x = E sqrt(N-1) + X / (pi rho), rho the semicircle density
//   sqrt(N-1) sqrt(4 - E^2) / (2 pi); normalized kernel K / rho; limit sin(X-Y)/(X-Y).
//
// The plus-sign form with the sqrt(2(N-1)) normalization is kept alongside as
// printed_normalized / printed_limit for comparison.
struct SineLimitRecord
{
  int N = 0;
  LimitRegime regime = LimitRegime::origin;
  double energy = 0.0;
  std::vector<std::pair<double, double>> points;
  std::vector<double> normalized;
  std::vector<double> limit;
  std::vector<double> abs_difference;
  std::vector<double> printed_normalized;
  std::vector<double> printed_limit;
  double sup_difference = 0.0;
  double limit_scale = 0.0;  // max |limit| over the points
};

SineLimitRecord sine_limit_check(int N, const std::vector<std::pair<double, double>> &points, LimitRegime regime,
                                 double energy = 0.0);

// sin(x)/x with the removable singularity filled in.
double sinc(double x);

// Square grid of points in [-half_width, half_width]^2 with `per_side` points per axis.
std::vector<std::pair<double, double>> square_grid(double half_width, int per_side);

}  // namespace rmt
