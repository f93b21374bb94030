#include "evolim/numerics.hpp"

#include <cassert>
#include <cstdlib>

#include "evolim/errors.hpp"

namespace evolim {

double interp_table(std::span<const double> xs, std::span<const double> ys, double x) {
  assert(xs.size() == ys.size() && !xs.empty());
  if (x <= xs.front()) return ys.front();
  if (x >= xs.back()) return ys.back();
  auto it = std::upper_bound(xs.begin(), xs.end(), x);
  std::size_t j = static_cast<std::size_t>(it - xs.begin()) - 1;
  double th = (x - xs[j]) / (xs[j + 1] - xs[j]);
  return ys[j] * (1.0 - th) + ys[j + 1] * th;
}

double step_value(std::span<const double> times, std::span<const double> values, double t) {
  if (times.empty()) throw InvalidInputError("step_value: empty series");
  if (t <= times.front()) return values.front();
  auto it = std::upper_bound(times.begin(), times.end(), t);
  std::size_t j = static_cast<std::size_t>(it - times.begin());
  return values[std::min(j - 1, values.size() - 1)];
}

double step_integral(std::span<const double> times, std::span<const double> values,
                     double a, double b) {
  if (times.size() != values.size() || times.empty())
    throw InvalidInputError("step_integral: bad series");
  if (b <= a) return 0.0;
  double acc = 0.0;
  for (std::size_t m = 0; m < times.size(); ++m) {
    double lo = std::max(a, times[m]);
    double hi = (m + 1 < times.size()) ? std::min(b, times[m + 1]) : b;
    if (hi > lo) acc += values[m] * (hi - lo);
  }
  // segment before the first sample extends the first value backwards
  if (a < times.front()) acc += values.front() * (std::min(b, times.front()) - a);
  return acc;
}

double step_abs_diff_integral(std::span<const double> ta, std::span<const double> va,
                              std::span<const double> tb, std::span<const double> vb,
                              double a, double b) {
  if (b <= a) return 0.0;
  // merged breakpoints restricted to [a,b]
  std::vector<double> cuts;
  cuts.reserve(ta.size() + tb.size() + 2);
  cuts.push_back(a);
  for (double t : ta)
    if (t > a && t < b) cuts.push_back(t);
  for (double t : tb)
    if (t > a && t < b) cuts.push_back(t);
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  double acc = 0.0;
  for (std::size_t m = 0; m + 1 < cuts.size(); ++m) {
    double lo = cuts[m], hi = cuts[m + 1];
    if (hi <= lo) continue;
    double mid = 0.5 * (lo + hi);
    acc += std::abs(step_value(ta, va, mid) - step_value(tb, vb, mid)) * (hi - lo);
  }
  return acc;
}

double fit_loglog_order(std::span<const double> eps, std::span<const double> vals) {
  if (eps.size() != vals.size() || eps.size() < 2)
    throw InvalidInputError("fit_loglog_order: need >= 2 samples");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  double n = static_cast<double>(eps.size());
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (!(eps[i] > 0.0) || !(vals[i] > 0.0))
      throw InvalidInputError("fit_loglog_order: inputs must be positive");
    double x = std::log(eps[i]), y = std::log(vals[i]);
    sx += x; sy += y; sxx += x * x; sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace evolim
