#include "rmt/core_linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "rmt/errors.hpp"
#include "rmt/rng.hpp"

namespace rmt
{

SkewMatrix::SkewMatrix(std::size_t n) : n_(n), lower_(n * (n - (n > 0 ? 1 : 0)) / 2, 0.0) {}

SkewMatrix::SkewMatrix(std::size_t n, std::vector<double> lower) : n_(n), lower_(std::move(lower))
{
  if (lower_.size() != (n == 0 ? 0 : n * (n - 1) / 2))
  {
    throw InvalidInput("SkewMatrix: packed lower triangle has wrong length");
  }
}

SkewMatrix SkewMatrix::from_dense(const Eigen::MatrixXd &W)
{
  if (W.rows() != W.cols())
  {
    throw InvalidInput("SkewMatrix::from_dense: matrix is not square");
  }
  const auto n = static_cast<std::size_t>(W.rows());
  std::vector<double> lower;
  lower.reserve(n * (n > 0 ? n - 1 : 0) / 2);
  for (Eigen::Index i = 0; i < W.rows(); i++)
  {
    if (W(i, i) != 0.0)
    {
      throw InvalidInput("SkewMatrix::from_dense: nonzero diagonal");
    }
    for (Eigen::Index j = 0; j < i; j++)
    {
      if (W(i, j) != -W(j, i) || !std::isfinite(W(i, j)))
      {
        throw InvalidInput("SkewMatrix::from_dense: matrix is not anti-symmetric");
      }
      lower.push_back(W(i, j));
    }
  }
  return SkewMatrix(n, std::move(lower));
}

double SkewMatrix::operator()(std::size_t i, std::size_t j) const
{
  if (i == j)
  {
    return 0.0;
  }
  return i > j ? lower_[packed_index(i, j)] : -lower_[packed_index(j, i)];
}

Eigen::MatrixXd SkewMatrix::dense() const
{
  const auto n = static_cast<Eigen::Index>(n_);
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n, n);
  std::size_t k = 0;
  for (Eigen::Index i = 1; i < n; i++)
  {
    for (Eigen::Index j = 0; j < i; j++)
    {
      W(i, j) = lower_[k];
      W(j, i) = -lower_[k];
      k++;
    }
  }
  return W;
}

double SkewMatrix::frobenius_norm_squared() const
{
  double s = 0.0;
  for (double a : lower_)
  {
    s += a * a;
  }
  return 2.0 * s;
}

HermitianMatrix::HermitianMatrix(std::size_t n) : n_(n), upper_(n * (n + 1) / 2) {}

HermitianMatrix HermitianMatrix::from_dense(const Eigen::MatrixXcd &H)
{
  if (H.rows() != H.cols())
  {
    throw InvalidInput("HermitianMatrix::from_dense: matrix is not square");
  }
  HermitianMatrix out(static_cast<std::size_t>(H.rows()));
  for (Eigen::Index i = 0; i < H.rows(); i++)
  {
    out.set(i, i, H(i, i).real());
    for (Eigen::Index j = i + 1; j < H.cols(); j++)
    {
      out.set(i, j, H(i, j));
    }
  }
  return out;
}

Complex HermitianMatrix::operator()(std::size_t i, std::size_t j) const
{
  return i <= j ? upper_[index(i, j)] : std::conj(upper_[index(j, i)]);
}

void HermitianMatrix::set(std::size_t i, std::size_t j, Complex value)
{
  if (i > j)
  {
    throw InvalidInput("HermitianMatrix::set: only the upper triangle is addressable");
  }
  if (i == j && value.imag() != 0.0)
  {
    throw InvalidInput("HermitianMatrix::set: diagonal entries must be real");
  }
  upper_[index(i, j)] = value;
}

Eigen::MatrixXcd HermitianMatrix::dense() const
{
  const auto n = static_cast<Eigen::Index>(n_);
  Eigen::MatrixXcd H(n, n);
  for (Eigen::Index i = 0; i < n; i++)
  {
    for (Eigen::Index j = i; j < n; j++)
    {
      H(i, j) = upper_[index(i, j)];
      H(j, i) = std::conj(H(i, j));
    }
  }
  return H;
}

std::size_t SkewSpectrum::position(long j) const
{
  const long p = positive_count();
  if (j < -p || j > p || (j == 0 && !has_zero_mode()))
  {
    throw InvalidInput("SkewSpectrum: label " + std::to_string(j) + " out of range");
  }
  if (has_zero_mode())
  {
    return static_cast<std::size_t>(p + j);
  }
  return static_cast<std::size_t>(j < 0 ? p + j : p + j - 1);
}

long SkewSpectrum::label(std::size_t pos) const
{
  const long p = positive_count();
  const long q = static_cast<long>(pos);
  if (has_zero_mode())
  {
    return q - p;
  }
  return q < p ? q - p : q - p + 1;
}

namespace
{

constexpr double eps = std::numeric_limits<double>::epsilon();

// Householder reduction of a dense skew matrix. On return A holds the skew-tridiagonal
// form on its first sub/super diagonals; reflector k (acting on rows k+1..n-1) has
// v(0) = 1 implicit and v(1:) stored in A(k+2:, k).
struct SkewTridiagonal
{
  Eigen::MatrixXd a;
  Eigen::VectorXd tau;
  Eigen::VectorXd offdiag;  // T(k, k+1), k = 0..n-2

  void apply_q(Eigen::MatrixXd &R) const
  {
    const Eigen::Index n = a.rows();
    for (Eigen::Index k = n - 3; k >= 0; k--)
    {
      if (tau(k) == 0.0)
      {
        continue;
      }
      const Eigen::Index m = n - k - 1;
      Eigen::VectorXd v(m);
      v(0) = 1.0;
      v.tail(m - 1) = a.col(k).tail(m - 1);
      auto block = R.bottomRows(m);
      Eigen::RowVectorXd w = v.transpose() * block;
      block.noalias() -= (tau(k) * v) * w;
    }
  }
};

SkewTridiagonal tridiagonalize(const SkewMatrix &W)
{
  SkewTridiagonal out;
  out.a = W.dense();
  Eigen::MatrixXd &A = out.a;
  const Eigen::Index n = A.rows();
  out.tau = Eigen::VectorXd::Zero(std::max<Eigen::Index>(n, 1));
  Eigen::VectorXd v, p;
  for (Eigen::Index k = 0; k + 2 < n; k++)
  {
    const Eigen::Index m = n - k - 1;
    auto x = A.col(k).segment(k + 1, m);
    const double alpha = x(0);
    const double tail_sq = x.tail(m - 1).squaredNorm();
    if (tail_sq == 0.0)
    {
      continue;
    }
    const double norm = std::sqrt(alpha * alpha + tail_sq);
    const double beta = alpha >= 0.0 ? -norm : norm;
    const double tau = (beta - alpha) / beta;
    v.resize(m);
    v(0) = 1.0;
    v.tail(m - 1) = x.tail(m - 1) / (alpha - beta);
    out.tau(k) = tau;

    // B <- P B P for skew B reduces to the rank-2 update B + v p^T - p v^T, p = tau B v.
    auto B = A.block(k + 1, k + 1, m, m);
    p.noalias() = tau * (B * v);
    B.noalias() += v * p.transpose();
    B.noalias() -= p * v.transpose();

    A(k + 1, k) = beta;
    A(k, k + 1) = -beta;
    A.row(k).tail(m - 1).setZero();
    A.col(k).tail(m - 1) = v.tail(m - 1);
  }
  out.offdiag.resize(std::max<Eigen::Index>(n - 1, 0));
  for (Eigen::Index k = 0; k + 1 < n; k++)
  {
    out.offdiag(k) = A(k, k + 1);
  }
  return out;
}

// Implicit-shift QL on a real symmetric tridiagonal matrix (diagonal d, off-diagonal e with
// e(k) coupling k and k+1). Eigenvectors are accumulated into z when it is non-null.
void tridiagonal_ql(Eigen::VectorXd &d, Eigen::VectorXd e_in, Eigen::MatrixXd *z)
{
  const Eigen::Index n = d.size();
  if (n <= 1)
  {
    return;
  }
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
  e.head(n - 1) = e_in;
  const long max_iterations = 30L * n;
  long iterations = 0;
  double tst1 = 0.0;
  for (Eigen::Index l = 0; l < n; l++)
  {
    tst1 = std::max(tst1, std::abs(d(l)) + std::abs(e(l)));
    Eigen::Index m = l;
    while (true)
    {
      for (m = l; m < n - 1; m++)
      {
        if (tst1 + std::abs(e(m)) == tst1)
        {
          break;
        }
      }
      if (m == l)
      {
        break;
      }
      if (++iterations > max_iterations)
      {
        throw NoConvergence("tridiagonal QL exceeded 30 n sweeps", std::abs(e(l)));
      }
      double g = (d(l + 1) - d(l)) / (2.0 * e(l));
      double r = std::hypot(g, 1.0);
      g = d(m) - d(l) + e(l) / (g + std::copysign(r, g));
      double s = 1.0, c = 1.0, p = 0.0;
      bool underflow = false;
      for (Eigen::Index i = m - 1; i >= l; i--)
      {
        double f = s * e(i);
        const double b = c * e(i);
        r = std::hypot(f, g);
        e(i + 1) = r;
        if (r == 0.0)
        {
          d(i + 1) -= p;
          e(m) = 0.0;
          underflow = true;
          break;
        }
        s = f / r;
        c = g / r;
        g = d(i + 1) - p;
        r = (d(i) - g) * s + 2.0 * c * b;
        p = s * r;
        d(i + 1) = g + p;
        g = c * r - b;
        if (z)
        {
          auto zi = z->col(i);
          auto zi1 = z->col(i + 1);
          for (Eigen::Index k = 0; k < n; k++)
          {
            f = zi1(k);
            zi1(k) = s * zi(k) + c * f;
            zi(k) = c * zi(k) - s * f;
          }
        }
      }
      if (underflow)
      {
        continue;
      }
      d(l) -= p;
      e(l) = g;
      e(m) = 0.0;
    }
  }
}

// Real and imaginary parts of D z with D = diag(i^k); they have disjoint supports.
void phase_split(const Eigen::VectorXd &z, Eigen::Ref<Eigen::VectorXd> re, Eigen::Ref<Eigen::VectorXd> im)
{
  re.setZero();
  im.setZero();
  for (Eigen::Index k = 0; k < z.size(); k++)
  {
    switch (k % 4)
    {
      case 0:
        re(k) = z(k);
        break;
      case 1:
        im(k) = z(k);
        break;
      case 2:
        re(k) = -z(k);
        break;
      default:
        im(k) = -z(k);
        break;
    }
  }
}

void fix_phase(Eigen::Ref<Eigen::VectorXcd> v)
{
  Eigen::Index best = 0;
  double best_abs = -1.0;
  for (Eigen::Index a = 0; a < v.size(); a++)
  {
    const double m = std::abs(v(a));
    if (m > best_abs)
    {
      best_abs = m;
      best = a;
    }
  }
  if (best_abs <= 0.0)
  {
    return;
  }
  const Complex phase = std::conj(v(best)) / best_abs;
  v *= phase;
  v(best) = Complex(best_abs, 0.0);
}

void fix_sign_real(Eigen::Ref<Eigen::VectorXd> v)
{
  const double cut = std::sqrt(eps) * v.cwiseAbs().maxCoeff();
  for (Eigen::Index a = 0; a < v.size(); a++)
  {
    if (std::abs(v(a)) > cut)
    {
      if (v(a) < 0.0)
      {
        v = -v;
      }
      return;
    }
  }
}

// Orthonormal basis of the column span of V by modified Gram-Schmidt with column pivoting.
Eigen::MatrixXd real_orthonormal_basis(Eigen::MatrixXd V, Eigen::Index rank)
{
  Eigen::MatrixXd basis(V.rows(), rank);
  for (Eigen::Index r = 0; r < rank; r++)
  {
    Eigen::Index best = 0;
    const double best_norm = V.colwise().norm().maxCoeff(&best);
    if (best_norm < 1e-6)
    {
      throw NumericalError("eigen_skew: null-space basis is rank deficient");
    }
    basis.col(r) = V.col(best) / best_norm;
    for (Eigen::Index c = 0; c < V.cols(); c++)
    {
      V.col(c) -= basis.col(r) * basis.col(r).dot(V.col(c));
    }
  }
  return basis;
}

}  // namespace

SkewSpectrum eigen_skew(const SkewMatrix &W, SpectrumJob job)
{
  const std::size_t n = W.size();
  if (n == 0)
  {
    throw InvalidInput("eigen_skew: dimension must be positive");
  }
  const bool want_vectors = job == SpectrumJob::values_and_vectors;
  const auto N = static_cast<Eigen::Index>(n);

  SkewSpectrum out;
  out.n = n;
  if (n == 1)
  {
    out.values = Eigen::VectorXd::Zero(1);
    if (want_vectors)
    {
      out.vectors = Eigen::MatrixXcd::Ones(1, 1);
    }
    return out;
  }

  const SkewTridiagonal tri = tridiagonalize(W);

  // With D = diag(i^k), D^* T D = i S where S is symmetric tridiagonal with zero diagonal
  // and the same off-diagonal; M = iW then has eigenvalues -sigma(S) and vectors Q D z.
  Eigen::VectorXd sigma = Eigen::VectorXd::Zero(N);
  Eigen::MatrixXd Z;
  if (want_vectors)
  {
    Z = Eigen::MatrixXd::Identity(N, N);
  }
  tridiagonal_ql(sigma, tri.offdiag, want_vectors ? &Z : nullptr);

  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return -sigma(a) < -sigma(b) || (-sigma(a) == -sigma(b) && a < b);
  });
  Eigen::VectorXd raw(N);
  for (Eigen::Index k = 0; k < N; k++)
  {
    raw(k) = -sigma(order[k]);
  }

  // Enforce the exact +- pairing.
  const long p = out.positive_count();
  out.values = Eigen::VectorXd::Zero(N);
  const double scale = raw.cwiseAbs().maxCoeff();
  const double zero_tol = 64.0 * static_cast<double>(n) * eps * scale;
  long zero_pairs = 0;
  for (long j = 1; j <= p; j++)
  {
    const auto hi = static_cast<Eigen::Index>(out.position(j));
    const auto lo = static_cast<Eigen::Index>(out.position(-j));
    double lam = 0.5 * (raw(hi) - raw(lo));
    if (lam <= zero_tol)
    {
      lam = 0.0;
      zero_pairs = j;
    }
    out.values(hi) = lam;
    out.values(lo) = -lam;
  }
  if (!want_vectors)
  {
    return out;
  }

  out.vectors.resize(N, N);
  const bool odd = out.has_zero_mode();

  // Null space (exactly degenerate zero eigenvalues) gets a real basis first, so pairs
  // built from it stay orthogonal to their conjugates.
  const long kernel_dim = 2 * zero_pairs + (odd ? 1 : 0);
  if (zero_pairs > 0)
  {
    Eigen::MatrixXd parts(N, 2 * kernel_dim);
    Eigen::Index c = 0;
    for (long j = -zero_pairs; j <= zero_pairs; j++)
    {
      if (j == 0 && !odd)
      {
        continue;
      }
      const Eigen::VectorXd z = Z.col(order[out.position(j)]);
      phase_split(z, parts.col(c), parts.col(c + 1));
      c += 2;
    }
    tri.apply_q(parts);
    const Eigen::MatrixXd basis = real_orthonormal_basis(parts, kernel_dim);
    Eigen::Index b = 0;
    if (odd)
    {
      Eigen::VectorXd v0 = basis.col(b++);
      fix_sign_real(v0);
      out.vectors.col(static_cast<Eigen::Index>(out.position(0))) = v0.cast<Complex>();
    }
    for (long j = 1; j <= zero_pairs; j++)
    {
      Eigen::VectorXcd v(N);
      v.real() = basis.col(b) / std::sqrt(2.0);
      v.imag() = basis.col(b + 1) / std::sqrt(2.0);
      b += 2;
      fix_phase(v);
      out.vectors.col(static_cast<Eigen::Index>(out.position(j))) = v;
      out.vectors.col(static_cast<Eigen::Index>(out.position(-j))) = v.conjugate();
    }
  }

  // Remaining vectors: real and imaginary parts of D z for every positive label, plus the
  // real part for v_0, transformed by Q in one pass.
  const long first = zero_pairs + 1;
  const Eigen::Index cols = 2 * (p - zero_pairs) + ((odd && zero_pairs == 0) ? 1 : 0);
  Eigen::MatrixXd R(N, cols);
  Eigen::VectorXd scratch(N);
  Eigen::Index c = 0;
  for (long j = first; j <= p; j++)
  {
    const Eigen::VectorXd z = Z.col(order[out.position(j)]);
    phase_split(z, R.col(c), R.col(c + 1));
    c += 2;
  }
  if (odd && zero_pairs == 0)
  {
    const Eigen::VectorXd z = Z.col(order[out.position(0)]);
    phase_split(z, R.col(c), scratch);
  }
  tri.apply_q(R);

  c = 0;
  for (long j = first; j <= p; j++)
  {
    Eigen::VectorXcd v(N);
    v.real() = R.col(c);
    v.imag() = R.col(c + 1);
    c += 2;
    v.normalize();
    fix_phase(v);
    out.vectors.col(static_cast<Eigen::Index>(out.position(j))) = v;
    out.vectors.col(static_cast<Eigen::Index>(out.position(-j))) = v.conjugate();
  }
  if (odd && zero_pairs == 0)
  {
    Eigen::VectorXd v0 = R.col(c);
    v0.normalize();
    fix_sign_real(v0);
    out.vectors.col(static_cast<Eigen::Index>(out.position(0))) = v0.cast<Complex>();
  }
  return out;
}

HermitianSpectrum eigen_hermitian(const Eigen::MatrixXcd &H)
{
  if (H.rows() == 0 || H.rows() != H.cols())
  {
    throw InvalidInput("eigen_hermitian: matrix must be square with positive dimension");
  }
  if (!H.allFinite())
  {
    throw InvalidInput("eigen_hermitian: non-finite entries");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(H, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success)
  {
    throw NoConvergence("eigen_hermitian: self-adjoint solver did not converge", 0.0);
  }
  return HermitianSpectrum{solver.eigenvalues(), solver.eigenvectors()};
}

HermitianSpectrum eigen_hermitian(const HermitianMatrix &H)
{
  if (H.size() == 0)
  {
    throw InvalidInput("eigen_hermitian: dimension must be positive");
  }
  return eigen_hermitian(H.dense());
}

namespace
{

// Partial-pivoted LU of an upper Hessenberg matrix; only adjacent rows ever swap.
class HessenbergLu
{
public:
  HessenbergLu(const Eigen::MatrixXcd &H, Complex shift) : lu_(H), swap_(H.rows()), mult_(H.rows())
  {
    const Eigen::Index n = lu_.rows();
    lu_.diagonal().array() -= shift;
    for (Eigen::Index k = 0; k + 1 < n; k++)
    {
      swap_[k] = std::abs(lu_(k + 1, k)) > std::abs(lu_(k, k));
      if (swap_[k])
      {
        lu_.row(k).tail(n - k).swap(lu_.row(k + 1).tail(n - k));
      }
      if (lu_(k, k) == Complex(0.0))
      {
        mult_[k] = 0.0;
        continue;
      }
      mult_[k] = lu_(k + 1, k) / lu_(k, k);
      lu_.row(k + 1).tail(n - k - 1) -= mult_[k] * lu_.row(k).tail(n - k - 1);
      lu_(k + 1, k) = 0.0;
    }
  }

  bool singular() const
  {
    for (Eigen::Index k = 0; k < lu_.rows(); k++)
    {
      if (lu_(k, k) == Complex(0.0))
      {
        return true;
      }
    }
    return false;
  }

  Eigen::VectorXcd solve(Eigen::VectorXcd b) const
  {
    const Eigen::Index n = lu_.rows();
    for (Eigen::Index k = 0; k + 1 < n; k++)
    {
      if (swap_[k])
      {
        std::swap(b(k), b(k + 1));
      }
      b(k + 1) -= mult_[k] * b(k);
    }
    for (Eigen::Index k = n - 1; k >= 0; k--)
    {
      Complex s = b(k);
      for (Eigen::Index j = k + 1; j < n; j++)
      {
        s -= lu_(k, j) * b(j);
      }
      b(k) = s / lu_(k, k);
    }
    return b;
  }

private:
  Eigen::MatrixXcd lu_;
  std::vector<bool> swap_;
  std::vector<Complex> mult_;
};

Eigen::VectorXcd start_vector(Eigen::Index n)
{
  CounterRng rng(0x5eed0fULL);
  Eigen::VectorXcd x(n);
  for (Eigen::Index a = 0; a < n; a++)
  {
    x(a) = Complex(rng.normal(), rng.normal());
  }
  return x.normalized();
}

}  // namespace

ShiftInvertRefiner::ShiftInvertRefiner(const Eigen::MatrixXcd &A) : a_(A), norm_a_(A.norm())
{
  if (A.rows() == 0 || A.rows() != A.cols())
  {
    throw InvalidInput("refine_eigenpair: matrix must be square with positive dimension");
  }
  if (!A.allFinite())
  {
    throw InvalidInput("refine_eigenpair: non-finite entries");
  }
  if (A.rows() <= 2)
  {
    hess_ = A;
    q_ = Eigen::MatrixXcd::Identity(A.rows(), A.cols());
  }
  else
  {
    Eigen::HessenbergDecomposition<Eigen::MatrixXcd> hd(A);
    hess_ = hd.matrixH();
    q_ = hd.matrixQ();
  }
}

RefinedEigenpair ShiftInvertRefiner::refine(Complex s0) const
{
  const Eigen::Index n = a_.rows();
  const double tol = relative_tolerance * norm_a_;
  RefinedEigenpair out;
  out.value = s0;

  Eigen::VectorXcd x = start_vector(n);
  Complex shift = s0;
  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXcd best_x = x;
  Complex best_s = s0;
  bool perturbed = false;

  for (int it = 1; it <= max_iterations; it++)
  {
    HessenbergLu lu(hess_, shift);
    Eigen::VectorXcd y;
    if (!lu.singular())
    {
      y = lu.solve(x);
    }
    if (lu.singular() || !y.allFinite() || y.norm() == 0.0)
    {
      if (perturbed)
      {
        throw NoConvergence("refine_eigenpair: shifted matrix singular after perturbed retry", best);
      }
      perturbed = true;
      shift += Complex(norm_a_ > 0.0 ? 1e-12 * norm_a_ : 1e-12, 0.0);
      continue;
    }
    x = y / y.norm();
    const Eigen::VectorXcd hx = hess_ * x;
    const Complex rq = x.dot(hx);  // x^* H x
    const double residual = (hx - rq * x).norm();
    if (residual < best)
    {
      best = residual;
      best_x = x;
      best_s = rq;
    }
    out.iterations = it;
    if (residual <= tol)
    {
      break;
    }
    shift = rq;
  }

  out.value = best_s;
  out.vector = q_ * best_x;
  out.residual = (a_ * out.vector - best_s * out.vector).norm();
  out.shift_perturbed = perturbed;
  if (!(out.residual <= std::max(tol, 4.0 * eps * norm_a_)))
  {
    throw NoConvergence("refine_eigenpair: no convergence within 100 iterations", out.residual);
  }
  return out;
}

RefinedEigenpair refine_eigenpair(const Eigen::MatrixXcd &A, Complex s0)
{
  return ShiftInvertRefiner(A).refine(s0);
}

}  // namespace rmt
