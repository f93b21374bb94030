#include "evolim/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "evolim/numerics.hpp"

namespace evolim::analysis {

namespace {
// relative u weights exp(phi/eps - max phi/eps) * trapezoid weight; the
// common factor cancels in every mass ratio
std::vector<double> relative_mass(const LogDensityState& state) {
  double shift = state.sup_phi() / state.eps;
  std::vector<double> u(state.phi.size());
  for (std::size_t j = 0; j < u.size(); ++j)
    u[j] = state.grid.weight(static_cast<int>(j)) *
           std::exp(state.phi[j] / state.eps - shift);
  return u;
}
}  // namespace

DiscreteMeasure dirac_locate(const LogDensityState& state, double threshold) {
  if (!(state.eps > 0.0)) throw InvalidInputError("dirac_locate: need eps > 0");
  const auto& phi = state.phi;
  const int n = state.grid.n;

  std::vector<int> maxima;
  for (int j = 0; j < n; ++j) {
    std::size_t ju = static_cast<std::size_t>(j);
    if (phi[ju] < -threshold) continue;
    double left = j > 0 ? phi[ju - 1] : -std::numeric_limits<double>::infinity();
    double right = j < n - 1 ? phi[ju + 1] : -std::numeric_limits<double>::infinity();
    // leftmost point of a plateau counts as the maximum
    if (phi[ju] >= right && phi[ju] > left) maxima.push_back(j);
    else if (j == 0 && phi[ju] >= right) maxima.push_back(j);
  }
  DiscreteMeasure mu;
  if (maxima.empty()) return mu;

  // basin boundaries: the argmin between consecutive retained maxima
  std::vector<int> bounds;  // basin b covers [bounds[b], bounds[b+1])
  bounds.push_back(0);
  for (std::size_t m = 0; m + 1 < maxima.size(); ++m) {
    int lo = maxima[m], hi = maxima[m + 1], arg = lo;
    double best = phi[static_cast<std::size_t>(lo)];
    for (int j = lo + 1; j <= hi; ++j)
      if (phi[static_cast<std::size_t>(j)] < best) {
        best = phi[static_cast<std::size_t>(j)];
        arg = j;
      }
    bounds.push_back(arg);
  }
  bounds.push_back(n);

  double total_log = log_mass(state);
  const auto& g = state.grid;
  for (std::size_t m = 0; m < maxima.size(); ++m) {
    int lo = bounds[m], hi = bounds[m + 1];
    double basin_log = log_sum_exp(static_cast<std::size_t>(hi - lo), [&](std::size_t q) {
      int j = lo + static_cast<int>(q);
      return std::log(g.weight(j)) + phi[static_cast<std::size_t>(j)] / state.eps;
    });
    // exp(total_log) * relative basin share, to stay exact on the total
    mu.atoms.push_back(Atom{g.node(maxima[m]),
                            std::exp(total_log) * std::exp(basin_log - total_log)});
  }
  return mu;
}

double concentration_halfwidth(const LogDensityState& state, double x0, double quantile) {
  if (!(state.eps > 0.0)) throw InvalidInputError("concentration_halfwidth: need eps > 0");
  if (!(quantile > 0.0 && quantile < 1.0))
    throw InvalidInputError("concentration_halfwidth: quantile in (0,1)");
  std::vector<double> u = relative_mass(state);
  double total = 0.0;
  for (double v : u) total += v;
  int c = state.grid.nearest(x0);
  const int n = state.grid.n;
  double acc = u[static_cast<std::size_t>(c)];
  int h = 0;
  while (acc < quantile * total) {
    ++h;
    int lo = c - h, hi = c + h;
    if (lo < 0 && hi >= n) break;  // whole grid
    if (lo >= 0) acc += u[static_cast<std::size_t>(lo)];
    if (hi < n) acc += u[static_cast<std::size_t>(hi)];
  }
  return h * state.grid.dx;
}

Window Window::central_fraction(const TraitGrid& grid, double fraction) {
  double half = 0.5 * fraction * grid.length();
  double mid = 0.5 * (grid.x_min + grid.x_max);
  return Window{mid - half, mid + half};
}

void SweepReport::fit_orders() {
  std::vector<double> eps, gap, igap, width;
  for (const auto& r : rows) {
    eps.push_back(r.eps);
    gap.push_back(std::max(r.sup_norm_gap, 1e-300));
    igap.push_back(std::max(r.I_gap_L1, 1e-300));
    width.push_back(std::max(r.concentration_width, 1e-300));
  }
  if (rows.size() >= 2) {
    gap_order = fit_loglog_order(eps, gap);
    igap_order = fit_loglog_order(eps, igap);
    width_order = fit_loglog_order(eps, width);
  }
}

SweepRow compare_runs(const pde::EpsTrace& eps_trace, const hj::LimitTrace& limit_trace,
                      const TraitGrid& grid, const Window& window, double quantile) {
  if (eps_trace.snapshots.size() != limit_trace.phi_snapshots.size() ||
      eps_trace.snapshots.empty())
    throw InvalidInputError("compare_runs: snapshot counts differ");
  for (std::size_t f = 0; f < eps_trace.snapshots.size(); ++f) {
    if (std::abs(eps_trace.snapshots[f].t - limit_trace.phi_snapshots[f].t) > 1e-9)
      throw InvalidInputError("compare_runs: snapshot times differ");
    if (eps_trace.snapshots[f].phi.size() != static_cast<std::size_t>(grid.n) ||
        limit_trace.phi_snapshots[f].phi.size() != static_cast<std::size_t>(grid.n))
      throw InvalidInputError("compare_runs: snapshot grids differ");
  }
  if (eps_trace.k() != limit_trace.k())
    throw InvalidInputError("compare_runs: resource counts differ");

  SweepRow row;
  row.eps = eps_trace.eps;
  for (std::size_t f = 0; f < eps_trace.snapshots.size(); ++f) {
    const auto& a = eps_trace.snapshots[f].phi;
    const auto& b = limit_trace.phi_snapshots[f].phi;
    for (int j = 0; j < grid.n; ++j)
      if (window.contains(grid.node(j)))
        row.sup_norm_gap = std::max(
            row.sup_norm_gap, std::abs(a[static_cast<std::size_t>(j)] -
                                       b[static_cast<std::size_t>(j)]));
  }

  double T = std::min(eps_trace.times.back(), limit_trace.times.back());
  for (int i = 0; i < eps_trace.k(); ++i)
    row.I_gap_L1 += step_abs_diff_integral(
        eps_trace.times, eps_trace.I_series[static_cast<std::size_t>(i)], limit_trace.times,
        limit_trace.I_series[static_cast<std::size_t>(i)], 0.0, T);

  row.mass_min = *std::min_element(eps_trace.mass_series.begin(), eps_trace.mass_series.end());
  row.mass_max = *std::max_element(eps_trace.mass_series.begin(), eps_trace.mass_series.end());

  // concentration width around the heaviest limit atom at final time
  if (!limit_trace.measure_frames.empty() &&
      !limit_trace.measure_frames.back().certificate.measure.empty()) {
    const auto& atoms = limit_trace.measure_frames.back().certificate.measure.atoms;
    const Atom* main = &atoms[0];
    for (const auto& a : atoms)
      if (a.weight > main->weight) main = &a;
    LogDensityState final_state(grid, eps_trace.snapshots.back().phi, eps_trace.eps,
                                eps_trace.snapshots.back().t);
    row.concentration_width = concentration_halfwidth(final_state, main->x, quantile);
  }
  return row;
}

std::vector<double> lebesgue_right_continuity(std::span<const double> times,
                                              std::span<const double> values, double t,
                                              std::span<const double> s_values) {
  if (times.size() != values.size() || times.empty())
    throw InvalidInputError("lebesgue_right_continuity: bad series");
  double It = step_value(times, values, t);
  std::vector<double> profile;
  profile.reserve(s_values.size());
  std::vector<double> shifted(values.begin(), values.end());
  for (double& v : shifted) v = std::abs(v - It);
  for (double s : s_values) {
    if (!(s > 0.0)) throw InvalidInputError("lebesgue_right_continuity: s must be > 0");
    profile.push_back(step_integral(times, shifted, t, t + s) / s);
  }
  return profile;
}

}  // namespace evolim::analysis
