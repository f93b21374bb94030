#pragma once

#include <span>
#include <vector>

#include "evolim/errors.hpp"
#include "evolim/grid.hpp"
#include "evolim/kernel.hpp"
#include "evolim/resources.hpp"

namespace evolim {

// Log-density phi(t, .) on a grid together with its scale eps.
// eps > 0 is the finite-scale field of u = exp(phi/eps); eps == 0 marks a
// limit object. phi must stay finite; boundary decay is encoded by large
// negative values, never by infinities.
struct LogDensityState {
  TraitGrid grid;
  std::vector<double> phi;
  double eps = 0.0;
  double t = 0.0;

  LogDensityState() = default;
  LogDensityState(TraitGrid g, std::vector<double> phi_, double eps_, double t_ = 0.0);

  void validate() const;  // throws InvalidInputError on non-finite phi
  double sup_phi() const;
};

struct Snapshot {
  double t = 0.0;
  std::vector<double> phi;
};

// phi at an arbitrary point: linear interpolation inside the grid, linear
// extrapolation with the one-sided boundary slope outside.
double interp_phi(const LogDensityState& state, double x);

// H_eps at node j:  integral of K(z) (e^{(phi(x_j + eps z) - phi(x_j))/eps} - 1) dz.
// Requires eps > 0. Throws RangeError when an exponent exceeds the guard.
double hamiltonian_H_eps(const LogDensityState& state, const MutationKernel& kernel, int j,
                         double guard = kOverflowGuard);

// Same integral over all nodes at once, with the per-q interpolation offsets
// hoisted out of the node loop. Returns results in out (size n).
class HepsEvaluator {
 public:
  HepsEvaluator(const TraitGrid& grid, const MutationKernel& kernel, double eps);
  // out[j] = H_eps(phi)(x_j); throws RangeError on guard violation
  void eval(std::span<const double> phi, std::span<double> out,
            double guard = kOverflowGuard) const;

 private:
  TraitGrid grid_;
  const MutationKernel& kernel_;
  double eps_;
  std::vector<int> shift_;     // floor(eps z_q / dx)
  std::vector<double> frac_;   // fractional part of the offset
};

// log of integral of e^{phi/eps} dx via log-sum-exp over trapezoid weights.
double log_mass(const LogDensityState& state);

// I_i = 1/(1 + integral eta_i e^{phi/eps} dx), evaluated in log space so that
// large phi/eps never overflows. Throws RangeError if phi/eps exceeds guard.
ResourceVector resources_from_log_density(const LogDensityState& state,
                                          const ResourceTable& table,
                                          double guard = kOverflowGuard);

// max_j |phi_{j+1} - phi_j| / dx
double lipschitz_seminorm(std::span<const double> phi, double dx);
// min_j (phi_{j+1} - 2 phi_j + phi_{j-1}) / dx^2
double min_second_difference(std::span<const double> phi, double dx);

}  // namespace evolim
