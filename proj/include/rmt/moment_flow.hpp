#pragma once

#include <cstddef>
#include <functional>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "rmt/core_linalg.hpp"

namespace rmt
{

enum class FlowMode
{
  hermitian,
  antisymmetric,
};

// Every occupancy vector with `particles` particles on `sites` sites, in colexicographic
// order (compared from the last site backwards). At most 12 sites and 4 particles.
class ConfigurationSpace
{
public:
  ConfigurationSpace() = default;
  ConfigurationSpace(std::size_t sites, int particles);

  std::size_t sites() const { return sites_; }
  int particles() const { return particles_; }
  std::size_t size() const { return configs_.size(); }
  const std::vector<int> &operator[](std::size_t k) const { return configs_[k]; }
  std::size_t index(const std::vector<int> &eta) const;

  static constexpr std::size_t max_sites = 12;
  static constexpr int max_particles = 4;

private:
  std::uint64_t key(const std::vector<int> &eta) const;

  std::size_t sites_ = 0;
  int particles_ = 0;
  std::vector<std::vector<int>> configs_;
  std::unordered_map<std::uint64_t, std::size_t> lookup_;
};

// Hermitian mode: one eigenvalue per site. Anti-symmetric mode: site 0 is the zero mode and
// the trajectory returns the positive eigenvalues lambda_1..lambda_p for sites 1..p.
using EigenvalueTrajectory = std::function<Eigen::VectorXd(double)>;

EigenvalueTrajectory frozen_eigenvalues(const Eigen::VectorXd &values);

struct FlowState
{
  FlowMode mode = FlowMode::hermitian;
  double N = 1.0;  // matrix dimension entering the 1/N of the rates
  EigenvalueTrajectory eigenvalues;
  ConfigurationSpace space;
  Eigen::VectorXd table;  // f(eta), indexed like `space`
  double time = 0.0;
};

FlowState make_flow_state(FlowMode mode, double N, EigenvalueTrajectory eigenvalues, std::size_t sites, int particles);

// Hermitian:      sum_{i != j} c_ij eta_i (1 + eta_j) (f(eta^{i,j}) - f(eta)).
// Anti-symmetric: sum_{i != j >= 1} (c_ij + ct_ij) eta_i (1 + eta_j) (f(eta^{i,j}) - f(eta))
//               + sum_{j >= 1} 2 c_0j eta_0 (1 + eta_j) (f(eta^{0,j}) - f(eta))
//               + sum_{i >= 1} c_0i eta_i (2 eta_0 + 1) (f(eta^{i,0}) - f(eta)),
// c_ij = 1/(N (l_i - l_j)^2), ct_ij = 1/(N (l_i + l_j)^2), c_0j = 1/(N l_j^2).
// eta^{i,j} moves one particle from i to j. Throws SingularCoefficient on coincident
// eigenvalues (or a zero eigenvalue in anti-symmetric mode).
Eigen::VectorXd generator_apply(const FlowState &state, double t);
Eigen::VectorXd generator_apply(const FlowState &state, double t, const Eigen::VectorXd &f);

// Dense matrix L with (Lf)(eta) = generator_apply; rows sum to zero.
Eigen::MatrixXd generator_matrix(const FlowState &state, double t);

// Largest total jump rate out of a configuration at time t.
double max_rate(const FlowState &state, double t);

// RK4 from state.time to state.time + T. Requires dt <= 0.1 / max_rate at every step;
// otherwise StabilityViolation carrying the required dt.
FlowState evolve_master(const FlowState &state, double T, double dt);

// sup_eta |f(t, eta) - 1| at each requested time (ascending, measured from state.time), by
// RK4 with step dt (0 picks 0.05 / max_rate at the start).
std::vector<double> convergence_report(const FlowState &state, const std::vector<double> &times, double dt = 0.0);

// Initial anti-symmetric table from one spectrum, averaged over the probe vectors q:
// f(eta) = mean_q (sqrt(n) z_0)^{2 eta_0} / (2 eta_0 - 1)!! * prod_k (2n |z_k|^2)^{eta_k} / (2^{eta_k} eta_k!)
// with z_k = <q, v_k>. Needs space.sites() == floor(n/2) + 1 and n odd.
Eigen::VectorXd antisymmetric_moment_table(const SkewSpectrum &spec, const ConfigurationSpace &space,
                                           const std::vector<Eigen::VectorXd> &probes);

}  // namespace rmt
