#include "rmt/moment_flow.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rmt/errors.hpp"

namespace rmt
{

namespace
{

void compositions(std::size_t sites, int remaining, std::size_t at, std::vector<int> &cur,
                  std::vector<std::vector<int>> &out)
{
  if (at + 1 == sites)
  {
    cur[at] = remaining;
    out.push_back(cur);
    return;
  }
  for (int k = 0; k <= remaining; k++)
  {
    cur[at] = k;
    compositions(sites, remaining - k, at + 1, cur, out);
  }
}

bool colex_less(const std::vector<int> &a, const std::vector<int> &b)
{
  for (std::size_t i = a.size(); i-- > 0;)
  {
    if (a[i] != b[i])
    {
      return a[i] < b[i];
    }
  }
  return false;
}

// Coefficient matrix of the moves i -> j at time t (diagonal unused).
Eigen::MatrixXd move_rates(const FlowState &state, double t)
{
  const Eigen::VectorXd lam = state.eigenvalues(t);
  const auto S = static_cast<Eigen::Index>(state.space.sites());
  const double N = state.N;
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(S, S);
  auto inv_sq = [&](double d) {
    if (d == 0.0 || !std::isfinite(d))
    {
      std::ostringstream msg;
      msg << "moment flow: coincident eigenvalues at t = " << t;
      throw SingularCoefficient(msg.str());
    }
    return 1.0 / (N * d * d);
  };
  if (state.mode == FlowMode::hermitian)
  {
    if (lam.size() != S)
    {
      throw InvalidInput("moment flow: need one eigenvalue per site");
    }
    for (Eigen::Index i = 0; i < S; i++)
    {
      for (Eigen::Index j = i + 1; j < S; j++)
      {
        c(i, j) = c(j, i) = inv_sq(lam(i) - lam(j));
      }
    }
    return c;
  }
  if (lam.size() != S - 1)
  {
    throw InvalidInput("moment flow: need sites - 1 positive eigenvalues");
  }
  for (Eigen::Index i = 1; i < S; i++)
  {
    const double li = lam(i - 1);
    const double c0 = inv_sq(li);
    c(0, i) = 2.0 * c0;  // combined with eta_0 (1 + eta_j)
    c(i, 0) = c0;        // combined with eta_i (2 eta_0 + 1)
    for (Eigen::Index j = i + 1; j < S; j++)
    {
      const double lj = lam(j - 1);
      c(i, j) = c(j, i) = inv_sq(li - lj) + inv_sq(li + lj);
    }
  }
  return c;
}

// Occupancy factor of the move i -> j from eta.
double occupancy_factor(FlowMode mode, const std::vector<int> &eta, std::size_t i, std::size_t j)
{
  if (mode == FlowMode::antisymmetric && j == 0)
  {
    return eta[i] * (2.0 * eta[0] + 1.0);
  }
  return eta[i] * (1.0 + eta[j]);
}

template <typename Visit>
void for_each_move(const FlowState &state, const Eigen::MatrixXd &c, Visit visit)
{
  const auto &space = state.space;
  const std::size_t S = space.sites();
  std::vector<int> moved;
  for (std::size_t k = 0; k < space.size(); k++)
  {
    const auto &eta = space[k];
    for (std::size_t i = 0; i < S; i++)
    {
      if (eta[i] == 0)
      {
        continue;
      }
      for (std::size_t j = 0; j < S; j++)
      {
        if (j == i)
        {
          continue;
        }
        moved = eta;
        moved[i]--;
        moved[j]++;
        const double rate = c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) *
                            occupancy_factor(state.mode, eta, i, j);
        visit(k, space.index(moved), rate);
      }
    }
  }
}

double double_factorial_odd(int j)  // (2j - 1)!!
{
  double out = 1.0;
  for (int k = 2 * j - 1; k > 1; k -= 2)
  {
    out *= k;
  }
  return out;
}

}  // namespace

ConfigurationSpace::ConfigurationSpace(std::size_t sites, int particles) : sites_(sites), particles_(particles)
{
  if (sites == 0 || sites > max_sites || particles < 0 || particles > max_particles)
  {
    throw InvalidInput("ConfigurationSpace: need 1..12 sites and 0..4 particles");
  }
  std::vector<int> cur(sites, 0);
  compositions(sites, particles, 0, cur, configs_);
  std::sort(configs_.begin(), configs_.end(), colex_less);
  for (std::size_t k = 0; k < configs_.size(); k++)
  {
    lookup_.emplace(key(configs_[k]), k);
  }
}

std::uint64_t ConfigurationSpace::key(const std::vector<int> &eta) const
{
  std::uint64_t k = 0;
  for (int e : eta)
  {
    k = k * static_cast<std::uint64_t>(max_particles + 1) + static_cast<std::uint64_t>(e);
  }
  return k;
}

std::size_t ConfigurationSpace::index(const std::vector<int> &eta) const
{
  if (eta.size() != sites_)
  {
    throw InvalidInput("ConfigurationSpace::index: wrong number of sites");
  }
  int total = 0;
  for (int e : eta)
  {
    if (e < 0)
    {
      throw InvalidInput("ConfigurationSpace::index: negative occupancy");
    }
    total += e;
  }
  if (total != particles_)
  {
    throw InvalidInput("ConfigurationSpace::index: particle number differs");
  }
  return lookup_.at(key(eta));
}

EigenvalueTrajectory frozen_eigenvalues(const Eigen::VectorXd &values)
{
  return [values](double) { return values; };
}

FlowState make_flow_state(FlowMode mode, double N, EigenvalueTrajectory eigenvalues, std::size_t sites, int particles)
{
  FlowState s;
  s.mode = mode;
  s.N = N;
  s.eigenvalues = std::move(eigenvalues);
  s.space = ConfigurationSpace(sites, particles);
  s.table = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(s.space.size()));
  return s;
}

Eigen::VectorXd generator_apply(const FlowState &state, double t, const Eigen::VectorXd &f)
{
  if (static_cast<std::size_t>(f.size()) != state.space.size())
  {
    throw InvalidInput("generator_apply: table size differs from the configuration count");
  }
  const Eigen::MatrixXd c = move_rates(state, t);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(f.size());
  for_each_move(state, c, [&](std::size_t from, std::size_t to, double rate) {
    const auto a = static_cast<Eigen::Index>(from);
    out(a) += rate * (f(static_cast<Eigen::Index>(to)) - f(a));
  });
  return out;
}

Eigen::VectorXd generator_apply(const FlowState &state, double t)
{
  return generator_apply(state, t, state.table);
}

Eigen::MatrixXd generator_matrix(const FlowState &state, double t)
{
  const auto m = static_cast<Eigen::Index>(state.space.size());
  const Eigen::MatrixXd c = move_rates(state, t);
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(m, m);
  for_each_move(state, c, [&](std::size_t from, std::size_t to, double rate) {
    const auto a = static_cast<Eigen::Index>(from);
    L(a, static_cast<Eigen::Index>(to)) += rate;
    L(a, a) -= rate;
  });
  return L;
}

double max_rate(const FlowState &state, double t)
{
  const Eigen::MatrixXd c = move_rates(state, t);
  std::vector<double> out(state.space.size(), 0.0);
  for_each_move(state, c, [&](std::size_t from, std::size_t, double rate) { out[from] += rate; });
  return out.empty() ? 0.0 : *std::max_element(out.begin(), out.end());
}

FlowState evolve_master(const FlowState &state, double T, double dt)
{
  if (!(dt > 0.0) || !(T >= 0.0))
  {
    throw InvalidInput("evolve_master: need dt > 0 and T >= 0");
  }
  FlowState out = state;
  const auto steps = T == 0.0 ? std::size_t{0} : static_cast<std::size_t>(std::ceil(T / dt - 1e-9));
  Eigen::VectorXd f = state.table;
  double t = state.time;
  for (std::size_t k = 0; k < steps; k++)
  {
    const double h = k + 1 == steps ? state.time + T - t : dt;
    const double rate = max_rate(state, t);
    if (rate > 0.0 && h > 0.1 / rate * (1.0 + 1e-12))
    {
      std::ostringstream msg;
      msg << "evolve_master: dt = " << h << " exceeds the stability bound " << 0.1 / rate;
      throw StabilityViolation(msg.str(), 0.1 / rate);
    }
    const Eigen::VectorXd k1 = generator_apply(state, t, f);
    const Eigen::VectorXd k2 = generator_apply(state, t + 0.5 * h, f + 0.5 * h * k1);
    const Eigen::VectorXd k3 = generator_apply(state, t + 0.5 * h, f + 0.5 * h * k2);
    const Eigen::VectorXd k4 = generator_apply(state, t + h, f + h * k3);
    f += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t = k + 1 == steps ? state.time + T : t + h;
  }
  out.table = f;
  out.time = t;
  return out;
}

std::vector<double> convergence_report(const FlowState &state, const std::vector<double> &times, double dt)
{
  if (!std::is_sorted(times.begin(), times.end()) || (!times.empty() && times.front() < 0.0))
  {
    throw InvalidInput("convergence_report: times must be ascending and nonnegative");
  }
  if (dt <= 0.0)
  {
    const double rate = max_rate(state, state.time);
    dt = rate > 0.0 ? 0.05 / rate : 0.1;
  }
  std::vector<double> out;
  FlowState cur = state;
  double elapsed = 0.0;
  for (double target : times)
  {
    if (target > elapsed)
    {
      cur = evolve_master(cur, target - elapsed, dt);
      elapsed = target;
    }
    out.push_back((cur.table.array() - 1.0).abs().maxCoeff());
  }
  return out;
}

Eigen::VectorXd antisymmetric_moment_table(const SkewSpectrum &spec, const ConfigurationSpace &space,
                                           const std::vector<Eigen::VectorXd> &probes)
{
  const std::size_t n = spec.n;
  if (n % 2 == 0 || !spec.has_vectors() || space.sites() != n / 2 + 1)
  {
    throw InvalidInput("antisymmetric_moment_table: need odd n with vectors and floor(n/2) + 1 sites");
  }
  if (probes.empty())
  {
    throw InvalidInput("antisymmetric_moment_table: no probe vectors");
  }
  const double dn = static_cast<double>(n);
  Eigen::VectorXd table = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space.size()));
  for (const auto &q : probes)
  {
    if (static_cast<std::size_t>(q.size()) != n)
    {
      throw InvalidInput("antisymmetric_moment_table: probe has wrong dimension");
    }
    const Eigen::VectorXcd qc = q.cast<Complex>();
    std::vector<double> site_value(space.sites());
    // sqrt(n) z_0 for the zero mode, 2n |z_k|^2 otherwise.
    site_value[0] = std::sqrt(dn) * spec.vector(0).dot(qc).real();
    for (std::size_t k = 1; k < space.sites(); k++)
    {
      site_value[k] = 2.0 * dn * std::norm(spec.vector(static_cast<long>(k)).dot(qc));
    }
    for (std::size_t c = 0; c < space.size(); c++)
    {
      const auto &eta = space[c];
      double v = std::pow(site_value[0], 2 * eta[0]) / double_factorial_odd(eta[0]);
      for (std::size_t k = 1; k < space.sites(); k++)
      {
        v *= std::pow(site_value[k], eta[k]) / (std::pow(2.0, eta[k]) * std::tgamma(eta[k] + 1.0));
      }
      table(static_cast<Eigen::Index>(c)) += v;
    }
  }
  return table / static_cast<double>(probes.size());
}

}  // namespace rmt
