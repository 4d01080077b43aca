#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "gvfn/gvf_spec.hpp"
#include "gvfn/numerics.hpp"

namespace gvfn {

/// Exact GVF-network model over H enumerated latent states.
///
/// For GVF j: p_gamma[j](h, h') = sum_a pi_j(a|h) Pr(h'|h,a) gamma_j(h') and
/// p_pi[j](h, h') = sum_a pi_j(a|h) Pr(h'|h,a). A compositional link c(j,i) makes GVF j's
/// expected cumulant C(j) + sum_i c(j,i) p_pi[j] V(i): the next-step value of GVF i under j's policy.
struct TabularModel {
  std::size_t num_states = 0;
  std::vector<Matrix> p_gamma;
  std::vector<Matrix> p_pi;
  std::vector<Vector> cumulant;
  std::vector<SpecEdge> edges;  // (from=j, to=i, weight=c(j,i))
  Vector d;

  std::size_t num_gvfs() const { return p_gamma.size(); }
  /// Throws on any shape or sign violation.
  void validate() const;
  /// Composition graph as a spec, for ordering checks.
  NetworkSpec as_spec() const;
};

/// Stacked [V(1); ...; V(n)].
using ValueTable = Vector;

ValueTable bellman_apply(const TabularModel& model, const ValueTable& v);

struct FixedPointResult {
  ValueTable value;
  std::size_t iterations = 0;
  bool converged = false;
  bool diverged = false;
  // ||V_t||_inf for t = 0..iterations.
  std::vector<double> norms;
};

FixedPointResult fixed_point_iterate(const TabularModel& model, const ValueTable& v0, double tol,
                                     std::size_t max_iter, double divergence_bound = 1e12);

/// Solves each GVF's linear system (I - P_gamma) V = C + links, dependencies first.
ValueTable direct_solve(const TabularModel& model);

/// Two GVFs on a 2-state chain, each the other's cumulant.
TabularModel counterexample_model();

/// beta_j = ||P_gamma(j)||_2.
Vector contraction_coefficients(const TabularModel& model);

/// Random acyclic model with every beta_j <= max_beta.
TabularModel random_acyclic_model(Rng& rng, std::size_t max_states, std::size_t max_gvfs, double max_beta);

struct TabularCheckReport {
  std::size_t models = 0;
  std::size_t converged = 0;
  std::size_t diverged = 0;
  double max_error = 0.0;
  bool counterexample_diverged = false;
  double counterexample_ratio = 0.0;
  std::size_t counterexample_iterations = 0;
};

/// Random-model fixed-point suite plus the divergence counterexample.
TabularCheckReport run_tabular_check(std::uint64_t seed, std::size_t models);

}  // namespace gvfn
