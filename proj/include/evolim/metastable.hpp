#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "evolim/errors.hpp"
#include "evolim/grid.hpp"
#include "evolim/measure.hpp"
#include "evolim/resources.hpp"

namespace evolim::metastable {

// Closed subset omega of the trait axis, stored as sorted grid indices.
struct FeasibleSet {
  std::vector<int> indices;

  bool empty() const { return indices.empty(); }
  int size() const { return static_cast<int>(indices.size()); }
  static FeasibleSet from_interval(const TraitGrid& grid, double a, double b);
  static FeasibleSet from_mask(std::span<const bool> mask);
  static FeasibleSet whole(const TraitGrid& grid);
  bool contains_near(const TraitGrid& grid, double x, double tol) const;
};

// Outcome of checking the equilibrium conditions: growth <= 0 on omega and
// = 0 on the support of the measure, with the induced resources.
struct EquilibriumCertificate {
  DiscreteMeasure measure;
  ResourceVector resources;
  double max_violation_on_omega = 0.0;   // max over omega of sum I eta - 1
  double max_residual_on_support = 0.0;  // max over atoms of |sum I eta - 1|
  double entropy_value = 0.0;
  double tol = 1e-6;
  bool degenerate = false;  // eta matrix nearly rank-deficient at the atoms
  bool passed() const {
    return max_violation_on_omega <= tol && max_residual_on_support <= tol;
  }
};

struct SolveOptions {
  double cert_tol = 1e-6;
  double prune_tol = 1e-10;
  int max_iters = 50000;
  double init_mass = 1.0;
  bool random_init = false;     // multiply the uniform start by U(0.5, 1.5)
  std::uint64_t seed = 0;
  double merge_radius_factor = 2.0;  // cluster radius in units of dx
  double mass_cap = 0.0;             // 0: derive from the initial entropy level
  double overflow_guard = 500.0;
};

// Raised when the minimizer or the replicator flow fails to reach the
// first-variation tolerance; carries the best iterate found.
class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& what, EquilibriumCertificate best)
      : Error(what), best_certificate(std::move(best)) {}
  EquilibriumCertificate best_certificate;
};

// bar I_i(mu) = 1 / (1 + sum_l alpha_l eta_i(x_l))
ResourceVector bar_resources(const DiscreteMeasure& mu, const ResourceModel& model);

// L(nu) = -sum_i log(1 + integral eta_i d nu) + integral d nu
double entropy(const DiscreteMeasure& mu, const ResourceModel& model);
// same on node weights aligned with omega.indices
double entropy(std::span<const double> weights, const FeasibleSet& omega,
               const TraitGrid& grid, const ResourceModel& model);

// growth rate sum_i bar I_i(nu) eta_i - 1 at the omega nodes for node weights
std::vector<double> growth_on_omega(std::span<const double> weights, const FeasibleSet& omega,
                                    const TraitGrid& grid, const ResourceModel& model);

// One explicit replicator step, multiplicative form nu <- nu * exp(dt * growth);
// positivity is unconditional.
std::vector<double> replicator_step(std::span<const double> weights, const FeasibleSet& omega,
                                    const TraitGrid& grid, const ResourceModel& model,
                                    double dt);

struct ReplicatorResult {
  std::vector<double> weights;
  int steps = 0;
  bool converged = false;
  double max_entropy_increase = 0.0;  // largest per-step increase of L observed
  double final_residual = 0.0;
};

// Integrate the replicator flow with adaptive dt until the residual on the
// populated nodes falls below cert_tol.
ReplicatorResult replicator_solve(const FeasibleSet& omega, const TraitGrid& grid,
                                  const ResourceModel& model, const SolveOptions& opts = {});

// Minimize the entropy L over nonnegative node weights supported in omega by
// multiplicative mirror descent with backtracking; returns the pruned, merged
// measure with its certificate. Throws NonConvergenceError after max_iters.
EquilibriumCertificate minimize_entropy(const FeasibleSet& omega, const TraitGrid& grid,
                                        const ResourceModel& model,
                                        const SolveOptions& opts = {});

// Evaluate both parts of the equilibrium condition for a given measure.
// Requires supp mu inside omega (within one grid spacing).
EquilibriumCertificate certify(const DiscreteMeasure& mu, const FeasibleSet& omega,
                               const TraitGrid& grid, const ResourceModel& model,
                               double cert_tol = 1e-6);

// convert converged node weights to a measure (prune + merge)
DiscreteMeasure weights_to_measure(std::span<const double> weights, const FeasibleSet& omega,
                                   const TraitGrid& grid, double prune_tol,
                                   double merge_radius);

}  // namespace evolim::metastable
