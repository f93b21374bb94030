#pragma once

#include <span>
#include <vector>

#include "evolim/hj.hpp"
#include "evolim/measure.hpp"
#include "evolim/pde.hpp"
#include "evolim/state.hpp"

namespace evolim::analysis {

// Locate the Dirac candidates of a finite-eps state: local maxima of phi
// above -threshold, each weighted with the u mass of its watershed basin
// (basins split at the minima between retained maxima, so the weights sum to
// the total mass).
DiscreteMeasure dirac_locate(const LogDensityState& state, double threshold = 1.0);

// Smallest half-width h (a grid multiple) such that [x0-h, x0+h] carries at
// least `quantile` of the total u mass.
double concentration_halfwidth(const LogDensityState& state, double x0, double quantile = 0.99);

struct Window {
  double x_lo = 0.0, x_hi = 0.0;
  static Window central_fraction(const TraitGrid& grid, double fraction);
  bool contains(double x) const { return x >= x_lo && x <= x_hi; }
};

struct SweepRow {
  double eps = 0.0;
  double sup_norm_gap = 0.0;          // max over window x output times of |phi_eps - phi|
  double I_gap_L1 = 0.0;              // integral over [0,T] of sum_i |I_i^eps - I_i|
  double mass_min = 0.0, mass_max = 0.0;
  double concentration_width = 0.0;   // 99% half-width around the main limit atom at T
};

struct SweepReport {
  std::vector<SweepRow> rows;         // eps strictly decreasing
  double gap_order = 0.0;             // fitted log-log orders (informational)
  double igap_order = 0.0;
  double width_order = 0.0;
  void fit_orders();
};

// Compare one finite-eps trace against the limit trace on a common grid and
// snapshot schedule. Throws InvalidInputError on misaligned outputs.
SweepRow compare_runs(const pde::EpsTrace& eps_trace, const hj::LimitTrace& limit_trace,
                      const TraitGrid& grid, const Window& window, double quantile = 0.99);

// (1/s) integral over [t, t+s] of |I(theta) - I(t)| for each s, with the
// series read as a right-continuous step function.
std::vector<double> lebesgue_right_continuity(std::span<const double> times,
                                              std::span<const double> values, double t,
                                              std::span<const double> s_values);

}  // namespace evolim::analysis
