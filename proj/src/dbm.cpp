#include "rmt/dbm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "rmt/ensembles.hpp"
#include "rmt/errors.hpp"
#include "rmt/parallel.hpp"

namespace rmt
{

namespace
{

std::size_t step_count(double T, double dt)
{
  if (!(dt > 0.0) || !(T >= 0.0))
  {
    throw InvalidInput("time stepping: need dt > 0 and T >= 0");
  }
  if (T == 0.0)
  {
    return 0;
  }
  return static_cast<std::size_t>(std::ceil(T / dt - 1e-9));
}

double step_length(std::size_t k, std::size_t steps, double T, double dt)
{
  return k + 1 == steps ? T - dt * static_cast<double>(steps - 1) : dt;
}

// (1/N)[sum_{l!=j} 1/(l_j - l_l) + sum_{l!=j} 1/(l_j + l_l) + [N odd] / l_j] - [ou] l_j / (2N).
Eigen::VectorXd sde_drift(const Eigen::VectorXd &lam, std::size_t N, SdeVariant variant)
{
  const Eigen::Index p = lam.size();
  const double inv_n = 1.0 / static_cast<double>(N);
  Eigen::VectorXd d(p);
  for (Eigen::Index j = 0; j < p; j++)
  {
    double s = 0.0;
    for (Eigen::Index l = 0; l < p; l++)
    {
      if (l != j)
      {
        s += 1.0 / (lam(j) - lam(l)) + 1.0 / (lam(j) + lam(l));
      }
    }
    if (N % 2 == 1)
    {
      s += 1.0 / lam(j);
    }
    d(j) = inv_n * s;
    if (variant == SdeVariant::ou)
    {
      d(j) -= 0.5 * inv_n * lam(j);
    }
  }
  return d;
}

// Smallest of lambda_1 (odd N only) and the consecutive gaps.
double min_separation(const Eigen::VectorXd &lam, bool include_origin)
{
  double m = std::numeric_limits<double>::infinity();
  if (lam.size() > 0 && include_origin)
  {
    m = lam(0);
  }
  for (Eigen::Index j = 0; j + 1 < lam.size(); j++)
  {
    m = std::min(m, lam(j + 1) - lam(j));
  }
  return m;
}

bool ordered_positive(const Eigen::VectorXd &lam)
{
  if (!lam.allFinite())
  {
    return false;
  }
  for (Eigen::Index j = 0; j < lam.size(); j++)
  {
    if (!(lam(j) > 0.0) || (j + 1 < lam.size() && !(lam(j) < lam(j + 1))))
    {
      return false;
    }
  }
  return true;
}

struct EigenvalueStepper
{
  std::size_t N;
  SdeVariant variant;
  const SdeOptions &options;
  CounterRng &rng;
  bool refined = false;

  void advance(Eigen::VectorXd &lam, double t, double h, const Eigen::VectorXd &dB, int depth)
  {
    const bool odd = N % 2 == 1;
    const double root_n = std::sqrt(static_cast<double>(N));
    const bool tight = min_separation(lam, odd) < 4.0 * std::sqrt(h / static_cast<double>(N));
    if (!tight || depth >= options.max_depth)
    {
      Eigen::VectorXd next = lam + dB / root_n + sde_drift(lam, N, variant) * h;
      if (!odd && next.size() > 0)
      {
        // Even N: lambda_1 and -lambda_1 meet at the origin and reflect.
        next(0) = std::abs(next(0));
      }
      if (ordered_positive(next))
      {
        lam = next;
        return;
      }
      if (depth >= options.max_depth)
      {
        std::ostringstream msg;
        msg << "eigenvalue_sde: eigenvalues collide at t = " << t << " below the substep floor";
        throw StepFailure(msg.str(), t);
      }
    }
    refined = true;
    Eigen::VectorXd first = 0.5 * dB;
    if (options.noise)
    {
      for (Eigen::Index j = 0; j < first.size(); j++)
      {
        first(j) += std::sqrt(0.25 * h) * rng.normal();
      }
    }
    const Eigen::VectorXd second = dB - first;
    advance(lam, t, 0.5 * h, first, depth + 1);
    advance(lam, t + 0.5 * h, 0.5 * h, second, depth + 1);
  }
};

// Columns of C express v_a (ascending position order) in the real basis e: for a positive
// label k, v_k = (e_re + i e_im)/sqrt2 with e_re, e_im at offset + 2(k-1), offset + 2(k-1) + 1.
struct LabelLayout
{
  std::size_t n;
  std::size_t p;
  bool odd;

  std::size_t offset() const { return odd ? 1 : 0; }
  std::size_t re_col(std::size_t k) const { return offset() + 2 * (k - 1); }
  std::size_t im_col(std::size_t k) const { return offset() + 2 * (k - 1) + 1; }
  // Position of signed label j in ascending order.
  std::size_t pos(long j) const
  {
    const long pl = static_cast<long>(p);
    if (odd)
    {
      return static_cast<std::size_t>(pl + j);
    }
    return static_cast<std::size_t>(j < 0 ? pl + j : pl + j - 1);
  }

  Eigen::MatrixXcd coefficients() const
  {
    const auto N = static_cast<Eigen::Index>(n);
    Eigen::MatrixXcd C = Eigen::MatrixXcd::Zero(N, N);
    const double r = 1.0 / std::sqrt(2.0);
    if (odd)
    {
      C(0, static_cast<Eigen::Index>(pos(0))) = 1.0;
    }
    for (std::size_t k = 1; k <= p; k++)
    {
      const auto up = static_cast<Eigen::Index>(pos(static_cast<long>(k)));
      const auto down = static_cast<Eigen::Index>(pos(-static_cast<long>(k)));
      const auto re = static_cast<Eigen::Index>(re_col(k));
      const auto im = static_cast<Eigen::Index>(im_col(k));
      C(re, up) = r;
      C(im, up) = Complex(0.0, r);
      C(re, down) = r;
      C(im, down) = Complex(0.0, -r);
    }
    return C;
  }
};

void real_mgs(Eigen::MatrixXd &E)
{
  for (Eigen::Index c = 0; c < E.cols(); c++)
  {
    for (Eigen::Index q = 0; q < c; q++)
    {
      E.col(c) -= E.col(q).dot(E.col(c)) * E.col(q);
    }
    const double nrm = E.col(c).norm();
    if (!(nrm > 0.0))
    {
      throw NumericalError("eigenvector_flow: basis lost rank during re-orthonormalization");
    }
    E.col(c) /= nrm;
  }
}

struct VectorStepper
{
  LabelLayout layout;
  Eigen::MatrixXcd C;
  const SdeOptions &options;
  CounterRng &rng;
  bool refined = false;

  Eigen::VectorXd full_values(const Eigen::VectorXd &lam) const
  {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layout.n));
    for (std::size_t k = 1; k <= layout.p; k++)
    {
      v(static_cast<Eigen::Index>(layout.pos(static_cast<long>(k)))) = lam(static_cast<Eigen::Index>(k - 1));
      v(static_cast<Eigen::Index>(layout.pos(-static_cast<long>(k)))) = -lam(static_cast<Eigen::Index>(k - 1));
    }
    return v;
  }

  // dW is a real anti-symmetric increment in the standard basis.
  void advance(Eigen::VectorXd &lam, Eigen::MatrixXd &E, double t, double h, const Eigen::MatrixXd &dW, int depth)
  {
    const double N = static_cast<double>(layout.n);
    const bool tight = min_separation(lam, layout.odd) < 10.0 * std::sqrt(h / N);
    if (!tight || depth >= options.max_depth)
    {
      Eigen::VectorXd lam_next;
      Eigen::MatrixXd E_next;
      if (try_step(lam, E, h, dW, lam_next, E_next))
      {
        lam = lam_next;
        E = E_next;
        return;
      }
      if (depth >= options.max_depth)
      {
        std::ostringstream msg;
        msg << "eigenvector_flow: eigenvalues collide at t = " << t << " below the substep floor";
        throw StepFailure(msg.str(), t);
      }
    }
    refined = true;
    Eigen::MatrixXd first = 0.5 * dW;
    if (options.noise)
    {
      const double sd = std::sqrt(0.25 * h / N);
      for (Eigen::Index a = 0; a < dW.rows(); a++)
      {
        for (Eigen::Index b = a + 1; b < dW.cols(); b++)
        {
          const double z = sd * rng.normal();
          first(a, b) += z;
          first(b, a) -= z;
        }
      }
    }
    const Eigen::MatrixXd second = dW - first;
    advance(lam, E, t, 0.5 * h, first, depth + 1);
    advance(lam, E, t + 0.5 * h, 0.5 * h, second, depth + 1);
  }

  bool try_step(const Eigen::VectorXd &lam, const Eigen::MatrixXd &E, double h, const Eigen::MatrixXd &dW,
                Eigen::VectorXd &lam_next, Eigen::MatrixXd &E_next) const
  {
    const auto n = static_cast<Eigen::Index>(layout.n);
    const double N = static_cast<double>(layout.n);
    const Eigen::MatrixXd g = E.transpose() * dW * E;
    // B(l, a) = v_l^* (i dW) v_a in eigen coordinates.
    const Eigen::MatrixXcd B = C.adjoint() * (Complex(0.0, 1.0) * g.cast<Complex>()) * C;
    const Eigen::VectorXd full = full_values(lam);

    lam_next = lam + sde_drift(lam, layout.n, SdeVariant::brownian) * h;
    for (std::size_t k = 1; k <= layout.p; k++)
    {
      const auto a = static_cast<Eigen::Index>(layout.pos(static_cast<long>(k)));
      lam_next(static_cast<Eigen::Index>(k - 1)) += B(a, a).real();
    }
    if (!ordered_positive(lam_next))
    {
      return false;
    }

    Eigen::MatrixXcd X = Eigen::MatrixXcd::Zero(n, n);
    for (Eigen::Index a = 0; a < n; a++)
    {
      double ito = 0.0;
      for (Eigen::Index l = 0; l < n; l++)
      {
        // Skip l = a and its mirror -lambda_a, whose coupling vanishes.
        if (l == a || l == n - 1 - a)
        {
          continue;
        }
        const double d = full(a) - full(l);
        X(l, a) = B(l, a) / d;
        ito += h / (N * d * d);
      }
      X(a, a) = -0.5 * ito;
    }
    const Eigen::MatrixXcd Y = C + C * X;  // new vectors in e coordinates

    Eigen::MatrixXd R(n, n);
    if (layout.odd)
    {
      const Eigen::Index z = static_cast<Eigen::Index>(layout.pos(0));
      R.col(0) = Y.col(z).real();
    }
    const double s2 = std::sqrt(2.0);
    for (std::size_t k = 1; k <= layout.p; k++)
    {
      const auto a = static_cast<Eigen::Index>(layout.pos(static_cast<long>(k)));
      R.col(static_cast<Eigen::Index>(layout.re_col(k))) = s2 * Y.col(a).real();
      R.col(static_cast<Eigen::Index>(layout.im_col(k))) = s2 * Y.col(a).imag();
    }
    E_next = E * R;
    real_mgs(E_next);
    return true;
  }

  SkewSpectrum snapshot(const Eigen::VectorXd &lam, const Eigen::MatrixXd &E) const
  {
    SkewSpectrum s;
    s.n = layout.n;
    s.values = full_values(lam);
    s.vectors = E.cast<Complex>() * C;
    return s;
  }
};

}  // namespace

MatrixPath matrix_flow(const SkewMatrix &M0, double T, double dt, const Seed &seed, std::size_t record_every)
{
  const std::size_t steps = step_count(T, dt);
  const std::size_t n = M0.size();
  if (n == 0)
  {
    throw InvalidInput("matrix_flow: empty matrix");
  }
  record_every = std::max<std::size_t>(record_every, 1);
  CounterRng rng(seed);
  std::vector<double> lower(M0.lower().begin(), M0.lower().end());
  MatrixPath path;
  path.times.push_back(0.0);
  path.snapshots.push_back(M0);
  double t = 0.0;
  for (std::size_t k = 0; k < steps; k++)
  {
    const double h = step_length(k, steps, T, dt);
    const double sd = std::sqrt(h / static_cast<double>(n));
    for (auto &x : lower)
    {
      x += sd * rng.normal();
    }
    t = k + 1 == steps ? T : t + h;
    if ((k + 1) % record_every == 0 || k + 1 == steps)
    {
      path.times.push_back(t);
      path.snapshots.emplace_back(n, lower);
    }
  }
  return path;
}

SkewMatrix ou_interpolation(const SkewMatrix &M0, double t, const Seed &seed)
{
  if (!(t >= 0.0))
  {
    throw InvalidInput("ou_interpolation: t must be nonnegative");
  }
  if (t == 0.0)
  {
    return M0;
  }
  const std::size_t n = M0.size();
  const SkewMatrix G = sample_skew_gaussian(n, seed, 1.0 / std::sqrt(static_cast<double>(n)));
  const double a = std::exp(-0.5 * t);
  const double b = std::sqrt(-std::expm1(-t));
  std::vector<double> lower(M0.lower().size());
  for (std::size_t k = 0; k < lower.size(); k++)
  {
    lower[k] = a * M0.lower()[k] + b * G.lower()[k];
  }
  return SkewMatrix(n, std::move(lower));
}

EigenPath eigenvalue_sde(const Eigen::VectorXd &lambda0, std::size_t N, double T, double dt, const Seed &seed,
                         SdeVariant variant, const SdeOptions &options)
{
  if (static_cast<std::size_t>(lambda0.size()) != N / 2)
  {
    throw InvalidInput("eigenvalue_sde: expected floor(N/2) positive eigenvalues");
  }
  if (!ordered_positive(lambda0))
  {
    throw InvalidInput("eigenvalue_sde: initial eigenvalues must be positive and strictly increasing");
  }
  const std::size_t steps = step_count(T, dt);
  const std::size_t every = std::max<std::size_t>(options.record_every, 1);
  CounterRng rng(seed);
  EigenvalueStepper stepper{N, variant, options, rng};
  EigenPath path;
  path.N = N;
  path.times.push_back(0.0);
  path.values.push_back(lambda0);
  Eigen::VectorXd lam = lambda0;
  Eigen::VectorXd dB(lam.size());
  double t = 0.0;
  for (std::size_t k = 0; k < steps; k++)
  {
    const double h = step_length(k, steps, T, dt);
    const double sd = std::sqrt(h);
    for (Eigen::Index j = 0; j < dB.size(); j++)
    {
      dB(j) = options.noise ? sd * rng.normal() : 0.0;
    }
    stepper.refined = false;
    stepper.advance(lam, t, h, dB, 0);
    path.substeps += stepper.refined ? 1 : 0;
    t = k + 1 == steps ? T : t + h;
    if ((k + 1) % every == 0 || k + 1 == steps)
    {
      path.times.push_back(t);
      path.values.push_back(lam);
    }
  }
  return path;
}

EigenvectorPath eigenvector_flow(const SkewSpectrum &spec0, double T, double dt, const Seed &seed,
                                 const SdeOptions &options)
{
  const std::size_t n = spec0.n;
  if (n == 0 || !spec0.has_vectors())
  {
    throw InvalidInput("eigenvector_flow: spectrum with eigenvectors required");
  }
  const LabelLayout layout{n, n / 2, n % 2 == 1};
  Eigen::VectorXd lam(static_cast<Eigen::Index>(layout.p));
  for (std::size_t k = 1; k <= layout.p; k++)
  {
    lam(static_cast<Eigen::Index>(k - 1)) = spec0.lambda(static_cast<long>(k));
  }
  if (!ordered_positive(lam))
  {
    throw InvalidInput("eigenvector_flow: positive eigenvalues must be distinct and nonzero");
  }
  const auto N = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd E(N, N);
  if (layout.odd)
  {
    E.col(0) = spec0.vector(0).real();
  }
  for (std::size_t k = 1; k <= layout.p; k++)
  {
    const Eigen::VectorXcd v = spec0.vector(static_cast<long>(k));
    E.col(static_cast<Eigen::Index>(layout.re_col(k))) = std::sqrt(2.0) * v.real();
    E.col(static_cast<Eigen::Index>(layout.im_col(k))) = std::sqrt(2.0) * v.imag();
  }
  real_mgs(E);

  const std::size_t steps = step_count(T, dt);
  const std::size_t every = std::max<std::size_t>(options.record_every, 1);
  CounterRng rng(seed);
  VectorStepper stepper{layout, layout.coefficients(), options, rng};
  EigenvectorPath path;
  path.times.push_back(0.0);
  path.states.push_back(spec0);
  double t = 0.0;
  Eigen::MatrixXd dW(N, N);
  for (std::size_t k = 0; k < steps; k++)
  {
    const double h = step_length(k, steps, T, dt);
    const double sd = std::sqrt(h / static_cast<double>(n));
    dW.setZero();
    if (options.noise)
    {
      for (Eigen::Index a = 0; a < N; a++)
      {
        for (Eigen::Index b = a + 1; b < N; b++)
        {
          const double z = sd * rng.normal();
          dW(a, b) = z;
          dW(b, a) = -z;
        }
      }
    }
    stepper.refined = false;
    stepper.advance(lam, E, t, h, dW, 0);
    path.substeps += stepper.refined ? 1 : 0;
    t = k + 1 == steps ? T : t + h;
    if ((k + 1) % every == 0 || k + 1 == steps)
    {
      path.times.push_back(t);
      path.states.push_back(stepper.snapshot(lam, E));
    }
  }
  return path;
}

DbmComparison compare_dbm(const SkewMatrix &M0, double T, double dt, std::size_t paths, const Seed &seed, int jobs)
{
  const std::size_t n = M0.size();
  if (n < 2 || paths < 2)
  {
    throw InvalidInput("compare_dbm: need n >= 2 and at least two paths");
  }
  const SkewSpectrum spec0 = eigen_skew(M0, SpectrumJob::values_only);
  const long p = spec0.positive_count();
  DbmComparison out;
  out.n = n;
  out.T = T;
  out.dt = dt;
  out.paths = paths;
  out.lambda0 = spec0.values.tail(p);
  std::vector<double> m_sq(paths), s_sq(paths), m_max(paths), s_max(paths);
  const Seed matrix_seed{seed.master, seed.stream};
  const Seed sde_seed{seed.master, seed.stream + 1};
  parallel_for(paths, resolve_jobs(jobs), [&](std::size_t k) {
    const MatrixPath mp = matrix_flow(M0, T, dt, matrix_seed.substream(k), step_count(T, dt) + 1);
    const Eigen::VectorXd end = eigen_skew(mp.snapshots.back(), SpectrumJob::values_only).values.tail(p);
    m_sq[k] = end.squaredNorm();
    m_max[k] = end(p - 1);
    SdeOptions opt;
    opt.record_every = step_count(T, dt) + 1;
    const EigenPath ep = eigenvalue_sde(out.lambda0, n, T, dt, sde_seed.substream(k), SdeVariant::brownian, opt);
    const Eigen::VectorXd &last = ep.values.back();
    s_sq[k] = last.squaredNorm();
    s_max[k] = last(p - 1);
  });
  out.matrix_sum_sq = mean_estimate(m_sq);
  out.sde_sum_sq = mean_estimate(s_sq);
  out.matrix_max = mean_estimate(m_max);
  out.sde_max = mean_estimate(s_max);
  out.expected_sum_sq = out.lambda0.squaredNorm() + 0.5 * static_cast<double>(n - 1) * T;
  auto z = [](const MeanEstimate &a, const MeanEstimate &b) {
    const double se = std::hypot(a.std_error, b.std_error);
    return se > 0.0 ? (a.mean - b.mean) / se : 0.0;
  };
  out.z_sum_sq = z(out.matrix_sum_sq, out.sde_sum_sq);
  out.z_max = z(out.matrix_max, out.sde_max);
  return out;
}

}  // namespace rmt
