#pragma once

#include <string>
#include <vector>

#include "evolim/kernel.hpp"
#include "evolim/metastable.hpp"
#include "evolim/resources.hpp"
#include "evolim/state.hpp"

namespace evolim::hj {

struct LimitRunConfig {
  TraitGrid grid;
  MutationKernel kernel = MutationKernel::cos2(1.0);
  ResourceModel model;
  double t_end = 1.0;
  double dt = 0.0;        // 0: from the CFL rule dt (lambda/dx + sup eta_bar + 1) <= cfl
  double cfl = 0.5;
  double zero_band = 0.0; // 0: auto, 10 * dx * running Lipschitz seminorm
  double lf_lambda = 0.0; // 0: auto from the running gradient range
  std::vector<double> initial_phi;
  std::vector<double> snapshot_times;
  metastable::SolveOptions meta_opts;
  double overflow_guard = kOverflowGuard;
  double phi_barrier = 20.0;

  LimitRunConfig(TraitGrid g, MutationKernel k, ResourceModel m)
      : grid(g), kernel(std::move(k)), model(std::move(m)) {}
};

struct MeasureFrame {
  double t = 0.0;
  metastable::EquilibriumCertificate certificate;
};

struct LimitTrace {
  std::vector<double> times;
  std::vector<std::vector<double>> I_series;  // [i][step]
  std::vector<double> mass_series;            // total atom weight
  std::vector<double> sup_phi_series;
  std::vector<double> lipschitz_series;
  std::vector<double> semiconvexity_series;
  std::vector<Snapshot> phi_snapshots;
  std::vector<MeasureFrame> measure_frames;   // at snapshot times

  int k() const { return static_cast<int>(I_series.size()); }
};

// Numerical zero set {phi >= -band}. Requires max phi <= ~0 (the clamped
// limit constraint).
metastable::FeasibleSet zero_set(const LogDensityState& state, double band);

// Lax-Friedrichs numerical Hamiltonian H((p-+p+)/2) - (lambda/2)(p+ - p-).
// Consistent (flux(p,p) = H(p)) and monotone for lambda >= |H'| on the range.
double numerical_hamiltonian(double p_minus, double p_plus, const MutationKernel& kernel,
                             double lambda, double guard = kOverflowGuard);

struct StepResult {
  LogDensityState state;
  ResourceVector I;
  DiscreteMeasure measure;
};

// One explicit step: closure first (omega, mu, I from the current phi), then
// monotone transport, then the clamp phi <- min(phi, 0).
StepResult limit_step(const LogDensityState& state, const LimitRunConfig& config, double dt);

// Transport-only step with frozen resources; clamp optional. The building
// block for limit_step, psi_solve and the monotonicity tests.
LogDensityState limit_step_frozen(const LogDensityState& state, const ResourceVector& I,
                                  const LimitRunConfig& config, double dt, double lambda,
                                  bool clamp);

LimitTrace solve_limit(const LimitRunConfig& config);

struct PsiResult {
  std::vector<Snapshot> psi_snapshots;
  std::vector<Snapshot> phi_reconstructed;  // psi + sum_i J_i(t) eta_i
};

// Integrate the transformed equation d_t psi = -1 + H(d_x psi + sum_i J_i(t)
// eta_i'(x)), J_i(t) = integral of I_i up to t, consuming a recorded resource
// series, then reconstruct phi. The series must start at t = 0.
PsiResult psi_solve(const LimitRunConfig& config, const std::vector<double>& times,
                    const std::vector<std::vector<double>>& I_series);

// suggested monotonicity coefficient for the running gradient range
double auto_lambda(const MutationKernel& kernel, double gradient_range, double guard);

}  // namespace evolim::hj
