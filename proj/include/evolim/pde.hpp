#pragma once

#include <memory>
#include <string>
#include <vector>

#include "evolim/kernel.hpp"
#include "evolim/resources.hpp"
#include "evolim/state.hpp"

namespace evolim::pde {

// Named initial log-density profiles satisfying the convergence hypotheses:
// bounded gradient, second derivative bounded below, max = 0.
struct InitialProfile {
  std::string name = "well";  // well | double_well | table
  double x0 = 0.0;
  double x1 = 2.0;                    // second well location (double_well)
  std::vector<double> table_x, table_phi;  // for name == "table"
};

// Build the profile on the grid and check the boundary barrier
// phi(x_min), phi(x_max) <= -phi_barrier. Throws ConfigError on violation.
std::vector<double> initial_profile(const InitialProfile& profile, const TraitGrid& grid,
                                    double phi_barrier = 20.0);

struct EpsRunConfig {
  double eps = 0.1;
  double t_end = 1.0;
  double dt = 0.0;   // 0: adaptive from the CFL rule below
  double cfl = 0.5;
  TraitGrid grid;
  MutationKernel kernel = MutationKernel::cos2(1.0);
  ResourceModel model;
  std::vector<double> initial_phi;
  std::vector<double> snapshot_times;  // always also records t = 0 and t_end
  int audit_every = 1;                 // series recording stride
  double overflow_guard = kOverflowGuard;
  double phi_barrier = 20.0;

  EpsRunConfig(TraitGrid g, MutationKernel k, ResourceModel m)
      : grid(g), kernel(std::move(k)), model(std::move(m)) {}
};

struct EpsTrace {
  double eps = 0.0;
  std::vector<double> times;
  std::vector<std::vector<double>> I_series;  // [i][step]
  std::vector<double> mass_series;            // exp(log_mass)
  std::vector<double> sup_phi_series;
  std::vector<double> lipschitz_series;
  std::vector<double> semiconvexity_series;   // min second difference
  std::vector<double> min_heps_series;
  std::vector<double> dt_phi_excess_series;   // max_j (|rhs_j| - eta_bar(x_j))
  std::vector<Snapshot> snapshots;
  bool blew_up = false;
  std::string blowup_reason;

  int k() const { return static_cast<int>(I_series.size()); }
};

// Integration aborted; carries whatever was recorded up to the failure.
class BlowUpError : public Error {
 public:
  BlowUpError(const std::string& what, std::shared_ptr<EpsTrace> partial)
      : Error(what), partial_trace(std::move(partial)) {}
  std::shared_ptr<EpsTrace> partial_trace;
};

// Frozen-resource right-hand side sum_i I_i eta_i - 1 + H_eps(phi) (one RK
// stage; resources are recomputed by the caller per stage).
void eps_rhs(const LogDensityState& state, const HepsEvaluator& heps,
             const ResourceTable& table, const ResourceVector& I, std::span<double> out,
             double guard = kOverflowGuard);

// One RK2 (Heun) step with the quasi-static resource closure at both stages.
// dt is taken from config.dt (must be > 0 here).
LogDensityState step(const LogDensityState& state, const EpsRunConfig& config);

// Integrate to t_end, recording resource, mass and regularity series.
// Throws BlowUpError with the partial trace on failure.
EpsTrace run(const EpsRunConfig& config);

// Constants for the runtime audit bounds; fit_constants derives them from a
// reference trace with a safety margin.
struct AuditConstants {
  double mass = 10.0;
  double dt_phi_excess = 10.0;
  double lipschitz = 10.0;
  double semiconvexity_drop = 10.0;    // require min D2 phi >= -this
  double heps_over_eps = 10.0;         // require min H_eps >= -this * eps
  double sup_phi_over_eps_log = 10.0;  // require sup phi <= this * eps log(1/eps)
};

struct AuditReport {
  struct Item {
    std::string name;
    bool pass = false;
    double observed = 0.0;
    double bound = 0.0;
  };
  std::vector<Item> items;
  bool all_pass = true;
};

AuditConstants fit_constants(const EpsTrace& trace, double margin = 1.5);
AuditReport audit(const EpsTrace& trace, const AuditConstants& constants);

}  // namespace evolim::pde
