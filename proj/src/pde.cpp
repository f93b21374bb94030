#include "evolim/pde.hpp"

#include <algorithm>
#include <cmath>

#include "evolim/numerics.hpp"

namespace evolim::pde {

namespace {
double well(double y) { return 1.0 - std::sqrt(1.0 + y * y); }
}  // namespace

std::vector<double> initial_profile(const InitialProfile& profile, const TraitGrid& grid,
                                    double phi_barrier) {
  std::vector<double> phi(static_cast<std::size_t>(grid.n));
  if (profile.name == "well") {
    for (int j = 0; j < grid.n; ++j)
      phi[static_cast<std::size_t>(j)] = well(grid.node(j) - profile.x0);
  } else if (profile.name == "double_well") {
    for (int j = 0; j < grid.n; ++j) {
      double x = grid.node(j);
      phi[static_cast<std::size_t>(j)] = std::max(well(x - profile.x0), well(x - profile.x1));
    }
  } else if (profile.name == "table") {
    if (profile.table_x.size() != profile.table_phi.size() || profile.table_x.size() < 2)
      throw ConfigError("initial_profile: table needs matching x/phi columns");
    for (int j = 0; j < grid.n; ++j) {
      double x = grid.node(j);
      if (x < profile.table_x.front() - 1e-9 || x > profile.table_x.back() + 1e-9)
        throw ConfigError("initial_profile: table does not cover the grid");
      phi[static_cast<std::size_t>(j)] = interp_table(profile.table_x, profile.table_phi, x);
    }
  } else {
    throw ConfigError("initial_profile: unknown profile '" + profile.name + "'");
  }
  if (!all_finite(phi)) throw ConfigError("initial_profile: non-finite values");
  if (phi.front() > -phi_barrier || phi.back() > -phi_barrier)
    throw ConfigError("initial_profile: boundary values above the -" +
                      std::to_string(phi_barrier) + " barrier; widen the grid");
  return phi;
}

void eps_rhs(const LogDensityState& state, const HepsEvaluator& heps,
             const ResourceTable& table, const ResourceVector& I, std::span<double> out,
             double guard) {
  heps.eval(state.phi, out, guard);
  for (int j = 0; j < state.grid.n; ++j) {
    double g = -1.0;
    for (int i = 0; i < table.k; ++i) g += I[i] * table.at(i, j);
    out[static_cast<std::size_t>(j)] += g;
  }
}

namespace {
struct StepScratch {
  std::vector<double> k1, k2, mid;
};

// One Heun step; returns stage-1 diagnostics through the out-params.
LogDensityState heun_step(const LogDensityState& state, const EpsRunConfig& config,
                          const HepsEvaluator& heps, const ResourceTable& table, double dt,
                          StepScratch& scratch, ResourceVector* I_out, double* min_heps,
                          double* max_heps, double* dt_excess) {
  const int n = state.grid.n;
  scratch.k1.resize(static_cast<std::size_t>(n));
  scratch.k2.resize(static_cast<std::size_t>(n));
  scratch.mid.resize(static_cast<std::size_t>(n));

  ResourceVector I1 = resources_from_log_density(state, table, config.overflow_guard);
  heps.eval(state.phi, scratch.k1, config.overflow_guard);
  double hmin = scratch.k1[0], hmax = scratch.k1[0];
  double excess = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < n; ++j) {
    double h = scratch.k1[static_cast<std::size_t>(j)];
    hmin = std::min(hmin, h);
    hmax = std::max(hmax, h);
    double g = -1.0;
    for (int i = 0; i < table.k; ++i) g += I1[i] * table.at(i, j);
    double r = g + h;
    scratch.k1[static_cast<std::size_t>(j)] = r;
    excess = std::max(excess, std::abs(r) - table.envelope[static_cast<std::size_t>(j)]);
  }

  LogDensityState mid_state = state;
  for (int j = 0; j < n; ++j)
    mid_state.phi[static_cast<std::size_t>(j)] =
        state.phi[static_cast<std::size_t>(j)] + dt * scratch.k1[static_cast<std::size_t>(j)];
  mid_state.t = state.t + dt;
  if (!all_finite(mid_state.phi)) throw RangeError("eps step produced non-finite phi");

  ResourceVector I2 = resources_from_log_density(mid_state, table, config.overflow_guard);
  eps_rhs(mid_state, heps, table, I2, scratch.k2, config.overflow_guard);

  LogDensityState out = state;
  out.t = state.t + dt;
  for (int j = 0; j < n; ++j)
    out.phi[static_cast<std::size_t>(j)] =
        state.phi[static_cast<std::size_t>(j)] +
        0.5 * dt * (scratch.k1[static_cast<std::size_t>(j)] + scratch.k2[static_cast<std::size_t>(j)]);
  if (!all_finite(out.phi)) throw RangeError("eps step produced non-finite phi");

  if (I_out) *I_out = I1;
  if (min_heps) *min_heps = hmin;
  if (max_heps) *max_heps = hmax;
  if (dt_excess) *dt_excess = excess;
  return out;
}

}  // namespace

LogDensityState step(const LogDensityState& state, const EpsRunConfig& config) {
  if (!(config.dt > 0.0)) throw InvalidInputError("pde::step: config.dt must be > 0");
  HepsEvaluator heps(state.grid, config.kernel, state.eps);
  ResourceTable table(config.model, state.grid);
  StepScratch scratch;
  return heun_step(state, config, heps, table, config.dt, scratch, nullptr, nullptr, nullptr,
                   nullptr);
}

EpsTrace run(const EpsRunConfig& config) {
  if (!(config.eps > 0.0)) throw InvalidInputError("pde::run: eps must be > 0");
  if (!(config.t_end > 0.0)) throw InvalidInputError("pde::run: t_end must be > 0");
  if (static_cast<int>(config.initial_phi.size()) != config.grid.n)
    throw InvalidInputError("pde::run: initial_phi length != grid size");

  auto trace = std::make_shared<EpsTrace>();
  trace->eps = config.eps;
  trace->I_series.resize(static_cast<std::size_t>(config.model.k()));

  LogDensityState state(config.grid, config.initial_phi, config.eps, 0.0);
  ResourceTable table(config.model, config.grid);
  HepsEvaluator heps(config.grid, config.kernel, config.eps);
  StepScratch scratch;

  // snapshot schedule: t = 0, requested interior times, t_end
  std::vector<double> snaps = config.snapshot_times;
  snaps.push_back(0.0);
  snaps.push_back(config.t_end);
  std::sort(snaps.begin(), snaps.end());
  snaps.erase(std::unique(snaps.begin(), snaps.end(),
                          [](double a, double b) { return std::abs(a - b) < 1e-12; }),
              snaps.end());
  std::size_t next_snap = 0;

  const double boundary_width = 2.0 * config.kernel.support_radius() * config.eps;

  auto record = [&](const ResourceVector& I, double mass, double hmin, double excess) {
    trace->times.push_back(state.t);
    for (int i = 0; i < config.model.k(); ++i)
      trace->I_series[static_cast<std::size_t>(i)].push_back(I[i]);
    trace->mass_series.push_back(mass);
    trace->sup_phi_series.push_back(state.sup_phi());
    trace->lipschitz_series.push_back(lipschitz_seminorm(state.phi, config.grid.dx));
    trace->semiconvexity_series.push_back(min_second_difference(state.phi, config.grid.dx));
    trace->min_heps_series.push_back(hmin);
    trace->dt_phi_excess_series.push_back(excess);
  };

  auto barrier_check = [&]() {
    double limit = -0.5 * config.phi_barrier;
    for (int j = 0; j < config.grid.n; ++j) {
      double x = config.grid.node(j);
      if (x - config.grid.x_min <= boundary_width || config.grid.x_max - x <= boundary_width) {
        if (state.phi[static_cast<std::size_t>(j)] > limit)
          throw RangeError("phi exceeded -phi_barrier/2 near a grid boundary");
      }
    }
  };

  try {
    barrier_check();
    int step_idx = 0;
    double running_max_heps = 0.0;
    bool have_heps = false;
    while (state.t < config.t_end - 1e-12) {
      while (next_snap < snaps.size() && state.t >= snaps[next_snap] - 1e-12) {
        trace->snapshots.push_back(Snapshot{state.t, state.phi});
        ++next_snap;
      }
      // choose dt: configured, or adaptive from the stability rates
      double dt;
      if (config.dt > 0.0) {
        dt = config.dt;
      } else {
        double lip = lipschitz_seminorm(state.phi, config.grid.dx);
        double hp = 0.0;
        if (!config.kernel.is_zero()) {
          double p = std::min(lip, 0.9 * config.overflow_guard / config.kernel.support_radius());
          hp = max_abs_H_prime(config.kernel, p, config.overflow_guard);
        }
        double rate = table.sup_envelope + 1.0 + hp;
        double m = 1.0 + std::max(running_max_heps, 0.0);
        if (!have_heps) {
          // bootstrap with the Lipschitz-based bound on the kernel row mass
          m = 1.0 + std::exp(std::min(config.kernel.support_radius() * lip, 50.0));
        }
        dt = config.cfl * std::min(1.0 / rate, config.eps / m);
      }
      // land exactly on the next snapshot time / final time
      double target = config.t_end;
      if (next_snap < snaps.size()) target = std::min(target, snaps[next_snap]);
      if (state.t + dt > target - 1e-12) dt = target - state.t;

      ResourceVector I;
      double hmin = 0.0, hmax = 0.0, excess = 0.0;
      LogDensityState next =
          heun_step(state, config, heps, table, dt, scratch, &I, &hmin, &hmax, &excess);

      if (step_idx % std::max(1, config.audit_every) == 0)
        record(I, std::exp(log_mass(state)), hmin, excess);

      state = std::move(next);
      running_max_heps = hmax;
      have_heps = true;
      ++step_idx;
      if (step_idx % 16 == 0) barrier_check();
    }
    // final record with resources recomputed from the final state
    ResourceVector If = resources_from_log_density(state, table, config.overflow_guard);
    std::vector<double> hbuf(static_cast<std::size_t>(config.grid.n));
    heps.eval(state.phi, hbuf, config.overflow_guard);
    double hmin = *std::min_element(hbuf.begin(), hbuf.end());
    record(If, std::exp(log_mass(state)), hmin,
           trace->dt_phi_excess_series.empty() ? 0.0 : trace->dt_phi_excess_series.back());
    if (trace->snapshots.empty() || trace->snapshots.back().t < config.t_end - 1e-9)
      trace->snapshots.push_back(Snapshot{state.t, state.phi});
  } catch (const RangeError& e) {
    trace->blew_up = true;
    trace->blowup_reason = e.what();
    throw BlowUpError(std::string("eps run blew up at t = ") + std::to_string(state.t) + ": " +
                          e.what(),
                      trace);
  }
  return *trace;
}

AuditConstants fit_constants(const EpsTrace& trace, double margin) {
  if (trace.times.empty()) throw InvalidInputError("fit_constants: empty trace");
  AuditConstants c;
  auto maxof = [](const std::vector<double>& v) {
    return *std::max_element(v.begin(), v.end());
  };
  auto minof = [](const std::vector<double>& v) {
    return *std::min_element(v.begin(), v.end());
  };
  c.mass = margin * maxof(trace.mass_series);
  c.dt_phi_excess = margin * std::max(maxof(trace.dt_phi_excess_series), 0.1);
  c.lipschitz = margin * maxof(trace.lipschitz_series);
  c.semiconvexity_drop = margin * std::max(-minof(trace.semiconvexity_series), 0.1);
  c.heps_over_eps = margin * std::max(-minof(trace.min_heps_series) / trace.eps, 0.1);
  double elog = trace.eps * std::log(1.0 / trace.eps);
  c.sup_phi_over_eps_log = margin * std::max(maxof(trace.sup_phi_series) / elog, 0.1);
  return c;
}

AuditReport audit(const EpsTrace& trace, const AuditConstants& constants) {
  AuditReport rep;
  auto push = [&](const std::string& name, bool pass, double observed, double bound) {
    rep.items.push_back(AuditReport::Item{name, pass, observed, bound});
    rep.all_pass = rep.all_pass && pass;
  };
  if (trace.blew_up || trace.times.empty()) {
    push("completed", false, 0.0, 1.0);
    return rep;
  }
  auto maxof = [](const std::vector<double>& v) {
    return *std::max_element(v.begin(), v.end());
  };
  auto minof = [](const std::vector<double>& v) {
    return *std::min_element(v.begin(), v.end());
  };
  push("completed", true, 1.0, 1.0);
  double m = maxof(trace.mass_series);
  push("mass <= C", m <= constants.mass, m, constants.mass);
  double ex = maxof(trace.dt_phi_excess_series);
  push("|dt phi| <= eta_bar + C", ex <= constants.dt_phi_excess, ex, constants.dt_phi_excess);
  double lip = maxof(trace.lipschitz_series);
  push("lipschitz <= C", lip <= constants.lipschitz, lip, constants.lipschitz);
  double sc = minof(trace.semiconvexity_series);
  push("second difference >= -C", sc >= -constants.semiconvexity_drop, sc,
       -constants.semiconvexity_drop);
  double hmin = minof(trace.min_heps_series);
  double hbound = -constants.heps_over_eps * trace.eps;
  push("H_eps >= -C eps", hmin >= hbound, hmin, hbound);
  double sp = maxof(trace.sup_phi_series);
  double pbound = constants.sup_phi_over_eps_log * trace.eps * std::log(1.0 / trace.eps);
  push("sup phi <= C eps log 1/eps", sp <= pbound, sp, pbound);
  return rep;
}

}  // namespace evolim::pde
