#include "evolim/hj.hpp"

#include <algorithm>
#include <cmath>

#include "evolim/numerics.hpp"

namespace evolim::hj {

metastable::FeasibleSet zero_set(const LogDensityState& state, double band) {
  if (state.sup_phi() > 1e-9)
    throw InvalidInputError("zero_set: phi must satisfy the max phi <= 0 constraint");
  if (!(band >= 0.0)) throw InvalidInputError("zero_set: band must be >= 0");
  metastable::FeasibleSet w;
  for (int j = 0; j < state.grid.n; ++j)
    if (state.phi[static_cast<std::size_t>(j)] >= -band) w.indices.push_back(j);
  return w;
}

double numerical_hamiltonian(double p_minus, double p_plus, const MutationKernel& kernel,
                             double lambda, double guard) {
  return hamiltonian_H(kernel, 0.5 * (p_minus + p_plus), guard) -
         0.5 * lambda * (p_plus - p_minus);
}

double auto_lambda(const MutationKernel& kernel, double gradient_range, double guard) {
  if (kernel.is_zero()) return 0.0;
  double p = std::min(std::abs(gradient_range) + 0.5,
                      0.9 * guard / kernel.support_radius());
  return 1.05 * max_abs_H_prime(kernel, p, guard);
}

LogDensityState limit_step_frozen(const LogDensityState& state, const ResourceVector& I,
                                  const LimitRunConfig& config, double dt, double lambda,
                                  bool clamp) {
  const int n = state.grid.n;
  const double dx = state.grid.dx;
  LogDensityState out = state;
  out.t = state.t + dt;
  for (int j = 0; j < n; ++j) {
    std::size_t ju = static_cast<std::size_t>(j);
    double p_minus = j > 0 ? (state.phi[ju] - state.phi[ju - 1]) / dx : 0.0;
    double p_plus = j < n - 1 ? (state.phi[ju + 1] - state.phi[ju]) / dx : 0.0;
    if (j == 0) p_minus = p_plus;          // one-sided boundary slopes
    if (j == n - 1) p_plus = p_minus;
    // The equation carries H on the right-hand side, so the monotone update
    // needs the viscosity with the opposite sign: swapping the one-sided
    // slopes in the Lax-Friedrichs flux does exactly that.
    double flux = numerical_hamiltonian(p_plus, p_minus, config.kernel, lambda,
                                        config.overflow_guard);
    double g = config.model.growth(I, state.grid.node(j));
    out.phi[ju] = state.phi[ju] + dt * (g + flux);
    if (clamp && out.phi[ju] > 0.0) out.phi[ju] = 0.0;
  }
  if (!all_finite(out.phi)) throw RangeError("limit step produced non-finite phi");
  return out;
}

namespace {
struct Closure {
  metastable::FeasibleSet omega;
  metastable::EquilibriumCertificate cert;
};

Closure closure_from_state(const LogDensityState& state, const LimitRunConfig& config) {
  double band = config.zero_band;
  if (band <= 0.0)
    band = 10.0 * state.grid.dx * std::max(lipschitz_seminorm(state.phi, state.grid.dx), 0.1);
  Closure c;
  c.omega = zero_set(state, band);
  c.cert = metastable::minimize_entropy(c.omega, state.grid, config.model, config.meta_opts);
  return c;
}
}  // namespace

StepResult limit_step(const LogDensityState& state, const LimitRunConfig& config, double dt) {
  if (!(dt > 0.0)) throw InvalidInputError("limit_step: need dt > 0");
  Closure c = closure_from_state(state, config);
  double lambda = config.lf_lambda;
  if (lambda <= 0.0)
    lambda = auto_lambda(config.kernel, lipschitz_seminorm(state.phi, state.grid.dx),
                         config.overflow_guard);
  StepResult res{limit_step_frozen(state, c.cert.resources, config, dt, lambda, true),
                 c.cert.resources, c.cert.measure};
  return res;
}

LimitTrace solve_limit(const LimitRunConfig& config) {
  if (!(config.t_end > 0.0)) throw InvalidInputError("solve_limit: t_end must be > 0");
  if (static_cast<int>(config.initial_phi.size()) != config.grid.n)
    throw InvalidInputError("solve_limit: initial_phi length != grid size");

  LimitTrace trace;
  trace.I_series.resize(static_cast<std::size_t>(config.model.k()));

  LogDensityState state(config.grid, config.initial_phi, 0.0, 0.0);
  // enforce the limit constraint on the initial data
  for (double& p : state.phi) p = std::min(p, 0.0);

  ResourceTable table(config.model, config.grid);

  std::vector<double> snaps = config.snapshot_times;
  snaps.push_back(0.0);
  snaps.push_back(config.t_end);
  std::sort(snaps.begin(), snaps.end());
  snaps.erase(std::unique(snaps.begin(), snaps.end(),
                          [](double a, double b) { return std::abs(a - b) < 1e-12; }),
              snaps.end());
  std::size_t next_snap = 0;

  auto take_snapshot = [&](const Closure& c) {
    trace.phi_snapshots.push_back(Snapshot{state.t, state.phi});
    trace.measure_frames.push_back(MeasureFrame{state.t, c.cert});
    ++next_snap;
  };

  while (true) {
    Closure c = closure_from_state(state, config);

    if (next_snap < snaps.size() && state.t >= snaps[next_snap] - 1e-12) take_snapshot(c);

    double lip = lipschitz_seminorm(state.phi, config.grid.dx);
    double lambda = config.lf_lambda > 0.0
                        ? config.lf_lambda
                        : auto_lambda(config.kernel, lip, config.overflow_guard);
    double dt = config.dt;
    if (dt <= 0.0)
      dt = config.cfl / (lambda / config.grid.dx + table.sup_envelope + 1.0);

    bool last = false;
    double target = config.t_end;
    if (next_snap < snaps.size()) target = std::min(target, snaps[next_snap]);
    if (state.t + dt >= target - 1e-12) dt = target - state.t;
    if (state.t >= config.t_end - 1e-12) last = true;

    trace.times.push_back(state.t);
    for (int i = 0; i < config.model.k(); ++i)
      trace.I_series[static_cast<std::size_t>(i)].push_back(c.cert.resources[i]);
    trace.mass_series.push_back(c.cert.measure.total_weight());
    trace.sup_phi_series.push_back(state.sup_phi());
    trace.lipschitz_series.push_back(lip);
    trace.semiconvexity_series.push_back(min_second_difference(state.phi, config.grid.dx));

    if (last) break;
    state = limit_step_frozen(state, c.cert.resources, config, dt, lambda, true);
  }
  return trace;
}

PsiResult psi_solve(const LimitRunConfig& config, const std::vector<double>& times,
                    const std::vector<std::vector<double>>& I_series) {
  const int n = config.grid.n;
  const int k = config.model.k();
  if (static_cast<int>(I_series.size()) != k)
    throw ConfigError("psi_solve: I series component count != model resources");
  for (const auto& s : I_series)
    if (s.size() != times.size()) throw ConfigError("psi_solve: misaligned I series");
  if (times.empty() || std::abs(times.front()) > 1e-12)
    throw ConfigError("psi_solve: series must start at t = 0");
  if (static_cast<int>(config.initial_phi.size()) != n)
    throw ConfigError("psi_solve: initial_phi length != grid size");

  // eta_i' at the cell interfaces x_{j +- 1/2}; the flux shift uses interface
  // values so the artificial viscosity acts on the reconstructed phi gradient
  std::vector<double> etap(static_cast<std::size_t>(k) * (n + 1));
  for (int i = 0; i < k; ++i)
    for (int j = 0; j <= n; ++j) {
      double x = config.grid.x_min + (j - 0.5) * config.grid.dx;
      etap[static_cast<std::size_t>(i) * (n + 1) + j] = config.model.eta_deriv(i, x);
    }

  std::vector<double> snaps = config.snapshot_times;
  snaps.push_back(0.0);
  snaps.push_back(config.t_end);
  std::sort(snaps.begin(), snaps.end());
  snaps.erase(std::unique(snaps.begin(), snaps.end(),
                          [](double a, double b) { return std::abs(a - b) < 1e-12; }),
              snaps.end());
  std::size_t next_snap = 0;

  LogDensityState psi(config.grid, config.initial_phi, 0.0, 0.0);
  for (double& p : psi.phi) p = std::min(p, 0.0);
  std::vector<double> J(static_cast<std::size_t>(k), 0.0);  // integral of I_i

  PsiResult res;
  auto reconstruct = [&]() {
    Snapshot rec{psi.t, psi.phi};
    for (int j = 0; j < n; ++j) {
      double x = config.grid.node(j);
      for (int i = 0; i < k; ++i)
        rec.phi[static_cast<std::size_t>(j)] += J[static_cast<std::size_t>(i)] *
                                                config.model.eta(i, x);
    }
    res.psi_snapshots.push_back(Snapshot{psi.t, psi.phi});
    res.phi_reconstructed.push_back(std::move(rec));
    ++next_snap;
  };

  const double dx = config.grid.dx;
  for (std::size_t m = 0; m < times.size(); ++m) {
    if (next_snap < snaps.size() && psi.t >= snaps[next_snap] - 1e-12) reconstruct();
    double t_next = (m + 1 < times.size()) ? times[m + 1] : config.t_end;
    double dt = t_next - times[m];
    if (dt <= 0.0) continue;

    // gradient range of the reconstructed phi for the monotonicity bound
    double max_arg = 0.0;
    std::vector<double> next(psi.phi.size());
    // first pass to size lambda
    for (int j = 0; j < n; ++j) {
      std::size_t ju = static_cast<std::size_t>(j);
      double q_minus = j > 0 ? (psi.phi[ju] - psi.phi[ju - 1]) / dx : 0.0;
      double q_plus = j < n - 1 ? (psi.phi[ju + 1] - psi.phi[ju]) / dx : 0.0;
      if (j == 0) q_minus = q_plus;
      if (j == n - 1) q_plus = q_minus;
      double bl = 0.0, br = 0.0;
      for (int i = 0; i < k; ++i) {
        bl += J[static_cast<std::size_t>(i)] * etap[static_cast<std::size_t>(i) * (n + 1) + j];
        br += J[static_cast<std::size_t>(i)] * etap[static_cast<std::size_t>(i) * (n + 1) + j + 1];
      }
      max_arg = std::max({max_arg, std::abs(q_minus + bl), std::abs(q_plus + br)});
    }
    double lambda = config.lf_lambda > 0.0
                        ? config.lf_lambda
                        : auto_lambda(config.kernel, max_arg, config.overflow_guard);

    for (int j = 0; j < n; ++j) {
      std::size_t ju = static_cast<std::size_t>(j);
      double q_minus = j > 0 ? (psi.phi[ju] - psi.phi[ju - 1]) / dx : 0.0;
      double q_plus = j < n - 1 ? (psi.phi[ju + 1] - psi.phi[ju]) / dx : 0.0;
      if (j == 0) q_minus = q_plus;
      if (j == n - 1) q_plus = q_minus;
      double bl = 0.0, br = 0.0;
      for (int i = 0; i < k; ++i) {
        bl += J[static_cast<std::size_t>(i)] * etap[static_cast<std::size_t>(i) * (n + 1) + j];
        br += J[static_cast<std::size_t>(i)] * etap[static_cast<std::size_t>(i) * (n + 1) + j + 1];
      }
      double p_minus = q_minus + bl, p_plus = q_plus + br;
      double flux = numerical_hamiltonian(p_plus, p_minus, config.kernel, lambda,
                                          config.overflow_guard);
      next[ju] = psi.phi[ju] + dt * (-1.0 + flux);
    }
    if (!all_finite(next)) throw RangeError("psi step produced non-finite field");
    psi.phi.swap(next);
    psi.t = t_next;
    // left-rule accumulation matches how the direct solver applies I over a step
    for (int i = 0; i < k; ++i)
      J[static_cast<std::size_t>(i)] += dt * I_series[static_cast<std::size_t>(i)][m];
    if (psi.t >= config.t_end - 1e-12) break;
  }
  while (next_snap < snaps.size() && psi.t >= snaps[next_snap] - 1e-12) reconstruct();
  return res;
}

}  // namespace evolim::hj
