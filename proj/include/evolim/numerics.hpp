#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace evolim {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(sum_j exp(term(j))) for j in [0, n), using the max-shift trick.
// Terms equal to -inf contribute nothing; returns -inf if all do.
template <typename F>
double log_sum_exp(std::size_t n, F&& term) {
  double m = kNegInf;
  for (std::size_t j = 0; j < n; ++j) m = std::max(m, term(j));
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (std::size_t j = 0; j < n; ++j) s += std::exp(term(j) - m);
  return m + std::log(s);
}

inline bool all_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

// Piecewise-linear interpolation on a sorted table; clamps outside the range.
double interp_table(std::span<const double> xs, std::span<const double> ys, double x);

// ---- Right-continuous step series ------------------------------------------
// A series (times[m], values[m]) is read as the step function taking
// values[m] on [times[m], times[m+1]) and values.back() from times.back() on.
// This matches how the solvers apply a resource vector over each time step.

double step_value(std::span<const double> times, std::span<const double> values, double t);

double step_integral(std::span<const double> times, std::span<const double> values,
                     double a, double b);

// integral over [a,b] of |A(t) - B(t)| for two step series (exact on the
// merged partition).
double step_abs_diff_integral(std::span<const double> ta, std::span<const double> va,
                              std::span<const double> tb, std::span<const double> vb,
                              double a, double b);

// Least-squares slope of log(vals) against log(eps). vals ~ eps^order gives
// back `order`. Requires positive inputs.
double fit_loglog_order(std::span<const double> eps, std::span<const double> vals);

}  // namespace evolim
