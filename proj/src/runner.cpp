#include "evolim/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <mutex>
#include <thread>

#include "evolim/analysis.hpp"
#include "evolim/artifacts.hpp"
#include "evolim/errors.hpp"
#include "evolim/metastable.hpp"
#include "evolim/version.hpp"

namespace evolim::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {
int g_log_level = 2;  // 0 error, 1 warn, 2 info, 3 debug
std::mutex g_log_mutex;
}  // namespace

void set_log_level(const std::string& level) {
  if (level == "quiet") g_log_level = -1;
  else if (level == "error") g_log_level = 0;
  else if (level == "warn") g_log_level = 1;
  else if (level == "info") g_log_level = 2;
  else if (level == "debug") g_log_level = 3;
  else throw ConfigError("unknown log level: " + level);
}

void log_msg(int level, const std::string& msg) {
  if (level > g_log_level) return;
  static const char* tags[] = {"error", "warn", "info", "debug"};
  std::lock_guard<std::mutex> lock(g_log_mutex);
  std::fprintf(stderr, "[%s] %s\n", tags[std::clamp(level, 0, 3)], msg.c_str());
}

namespace {

std::string eps_dir_name(double eps) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "eps_%g", eps);
  return buf;
}

void write_error_report(const std::string& dir, int code, const std::string& what) {
  if (dir.empty()) return;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) return;
  write_json(dir + "/error.json", json{{"exit_code", code}, {"error", what}});
}

struct BuiltScenario {
  Scenario s;
  TraitGrid grid;
  MutationKernel kernel;
  ResourceModel model;
  std::vector<double> initial_phi;
  std::vector<double> frames;

  explicit BuiltScenario(Scenario sc)
      : s(std::move(sc)),
        grid(build_grid(s)),
        kernel(build_kernel(s)),
        model(build_model(s)),
        initial_phi(build_initial_phi(s, grid)),
        frames(snapshot_times(s)) {}
};

metastable::SolveOptions meta_options(const Scenario& s) {
  metastable::SolveOptions o;
  o.cert_tol = s.tol.cert_tol;
  o.prune_tol = s.tol.prune_tol;
  o.overflow_guard = s.tol.overflow_guard;
  o.seed = s.seed;
  return o;
}

pde::EpsRunConfig eps_config(const BuiltScenario& b, double eps) {
  pde::EpsRunConfig cfg(b.grid, b.kernel, b.model);
  cfg.eps = eps;
  cfg.t_end = b.s.t_end;
  cfg.dt = b.s.dt;
  cfg.cfl = b.s.cfl;
  cfg.initial_phi = b.initial_phi;
  cfg.snapshot_times = b.frames;
  cfg.audit_every = b.s.audit.audit_every;
  cfg.overflow_guard = b.s.tol.overflow_guard;
  cfg.phi_barrier = b.s.tol.phi_barrier;
  return cfg;
}

hj::LimitRunConfig limit_config(const BuiltScenario& b) {
  hj::LimitRunConfig cfg(b.grid, b.kernel, b.model);
  cfg.t_end = b.s.t_end;
  cfg.dt = b.s.dt;
  cfg.cfl = b.s.cfl;
  cfg.zero_band = b.s.zero_band;
  cfg.lf_lambda = b.s.lf_lambda;
  cfg.initial_phi = b.initial_phi;
  cfg.snapshot_times = b.frames;
  cfg.meta_opts = meta_options(b.s);
  cfg.overflow_guard = b.s.tol.overflow_guard;
  cfg.phi_barrier = b.s.tol.phi_barrier;
  return cfg;
}

void write_snapshots(const std::string& dir, const TraitGrid& grid,
                     const std::vector<Snapshot>& snaps, double eps_or_zero,
                     const std::string& subdir = "snapshots") {
  fs::create_directories(dir + "/" + subdir);
  for (std::size_t f = 0; f < snaps.size(); ++f) {
    char name[64];
    std::snprintf(name, sizeof name, "%s/%s/frame_%03zu.csv", dir.c_str(), subdir.c_str(), f);
    write_snapshot_csv(name, grid, snaps[f].phi, eps_or_zero);
  }
}

json snapshots_manifest(const std::vector<Snapshot>& snaps, const std::string& subdir) {
  json arr = json::array();
  for (std::size_t f = 0; f < snaps.size(); ++f) {
    char name[48];
    std::snprintf(name, sizeof name, "%s/frame_%03zu.csv", subdir.c_str(), f);
    arr.push_back({{"t", snaps[f].t}, {"file", name}});
  }
  return arr;
}

// ---- eps run --------------------------------------------------------------

pde::EpsTrace run_eps_into(const BuiltScenario& b, double eps, const std::string& dir) {
  fs::create_directories(dir);
  pde::EpsTrace trace = pde::run(eps_config(b, eps));
  write_series_csv(dir + "/series.csv", trace.times, trace.I_series, trace.mass_series,
                   trace.sup_phi_series, trace.lipschitz_series, trace.semiconvexity_series);
  write_snapshots(dir, b.grid, trace.snapshots, eps);
  pde::AuditConstants consts = pde::fit_constants(trace, b.s.audit.margin);
  pde::AuditReport rep = pde::audit(trace, consts);
  write_json(dir + "/audit.json", audit_report_to_json(rep));

  json manifest;
  manifest["version"] = kVersion;
  manifest["kind"] = "eps";
  manifest["eps"] = eps;
  manifest["scenario"] = scenario_to_json(b.s);
  manifest["artifacts"] = {{"series", "series.csv"},
                           {"snapshots", snapshots_manifest(trace.snapshots, "snapshots")},
                           {"audit", "audit.json"}};
  json results;
  results["final_I"] = json::array();
  for (int i = 0; i < trace.k(); ++i)
    results["final_I"].push_back(trace.I_series[static_cast<std::size_t>(i)].back());
  results["final_mass"] = trace.mass_series.back();
  results["final_sup_phi"] = trace.sup_phi_series.back();
  results["steps"] = trace.times.size();
  manifest["results"] = results;
  write_json(dir + "/manifest.json", manifest);
  return trace;
}

// ---- limit run -------------------------------------------------------------

hj::LimitTrace run_limit_into(const BuiltScenario& b, const std::string& dir) {
  fs::create_directories(dir);
  hj::LimitTrace trace = hj::solve_limit(limit_config(b));
  write_series_csv(dir + "/series.csv", trace.times, trace.I_series, trace.mass_series,
                   trace.sup_phi_series, trace.lipschitz_series, trace.semiconvexity_series);
  write_snapshots(dir, b.grid, trace.phi_snapshots, 0.0);
  write_measure_log(dir + "/measures.log", trace.measure_frames);

  // right-continuity profiles of I_1 at the interior frame times
  json rc = json::array();
  if (!trace.times.empty() && trace.k() > 0) {
    std::vector<double> svals;
    for (double f : {0.08, 0.04, 0.02, 0.01}) svals.push_back(f * b.s.t_end);
    for (std::size_t f = 0; f + 1 < b.frames.size(); ++f) {
      double t = b.frames[f];
      auto prof = analysis::lebesgue_right_continuity(trace.times, trace.I_series[0], t, svals);
      rc.push_back({{"t", t}, {"s", svals}, {"avg_deviation", prof}});
    }
  }

  json manifest;
  manifest["version"] = kVersion;
  manifest["kind"] = "limit";
  manifest["scenario"] = scenario_to_json(b.s);
  manifest["artifacts"] = {{"series", "series.csv"},
                           {"snapshots", snapshots_manifest(trace.phi_snapshots, "snapshots")},
                           {"measures", "measures.log"}};
  json results;
  results["final_I"] = json::array();
  for (int i = 0; i < trace.k(); ++i)
    results["final_I"].push_back(trace.I_series[static_cast<std::size_t>(i)].back());
  bool certs_ok = true;
  bool any_degenerate = false;
  for (const auto& f : trace.measure_frames) {
    certs_ok = certs_ok && f.certificate.passed();
    any_degenerate = any_degenerate || f.certificate.degenerate;
  }
  results["certificates_pass"] = certs_ok;
  results["any_degenerate"] = any_degenerate;
  results["right_continuity_I1"] = rc;
  results["steps"] = trace.times.size();
  manifest["results"] = results;
  write_json(dir + "/manifest.json", manifest);
  return trace;
}

// ---- psi cross-check -------------------------------------------------------

double run_psi_into(const BuiltScenario& b, const hj::LimitTrace& direct,
                    const std::string& dir) {
  fs::create_directories(dir);
  hj::PsiResult psi = hj::psi_solve(limit_config(b), direct.times, direct.I_series);
  write_snapshots(dir, b.grid, psi.psi_snapshots, 0.0, "psi_snapshots");
  write_snapshots(dir, b.grid, psi.phi_reconstructed, 0.0, "snapshots");

  analysis::Window window =
      analysis::Window::central_fraction(b.grid, b.s.analysis.window_fraction);
  double gap = 0.0;
  std::size_t nf = std::min(psi.phi_reconstructed.size(), direct.phi_snapshots.size());
  for (std::size_t f = 0; f < nf; ++f)
    for (int j = 0; j < b.grid.n; ++j)
      if (window.contains(b.grid.node(j)))
        gap = std::max(gap, std::abs(psi.phi_reconstructed[f].phi[static_cast<std::size_t>(j)] -
                                     direct.phi_snapshots[f].phi[static_cast<std::size_t>(j)]));

  json manifest;
  manifest["version"] = kVersion;
  manifest["kind"] = "psi";
  manifest["scenario"] = scenario_to_json(b.s);
  manifest["artifacts"] = {
      {"psi_snapshots", snapshots_manifest(psi.psi_snapshots, "psi_snapshots")},
      {"snapshots", snapshots_manifest(psi.phi_reconstructed, "snapshots")}};
  manifest["results"] = {{"reconstruction_gap", gap}};
  write_json(dir + "/manifest.json", manifest);
  return gap;
}

// ---- sweep ------------------------------------------------------------------

int thread_budget(const GlobalOptions& opts, int jobs) {
  int t = opts.threads;
  if (t <= 0) t = static_cast<int>(std::thread::hardware_concurrency());
  if (t <= 0) t = 1;
  return std::max(1, std::min(t, jobs));
}

void run_sweep(const BuiltScenario& b, const std::string& out, const GlobalOptions& opts) {
  std::vector<double> eps = b.s.eps;
  std::sort(eps.begin(), eps.end(), std::greater<double>());

  // limit run plus one eps run per entry, executed concurrently
  std::vector<pde::EpsTrace> eps_traces(eps.size());
  hj::LimitTrace limit_trace;
  std::vector<std::function<void()>> jobs;
  for (std::size_t i = 0; i < eps.size(); ++i)
    jobs.push_back([&, i] {
      log_msg(2, "running eps = " + format_double(eps[i]));
      eps_traces[i] = run_eps_into(b, eps[i], out + "/" + eps_dir_name(eps[i]));
    });
  jobs.push_back([&] {
    log_msg(2, "running limit solver");
    limit_trace = run_limit_into(b, out + "/limit");
  });

  int workers = thread_budget(opts, static_cast<int>(jobs.size()));
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex err_mutex;
  auto worker = [&] {
    for (;;) {
      std::size_t idx = next.fetch_add(1);
      if (idx >= jobs.size()) return;
      try {
        jobs[idx]();
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  double psi_gap = -1.0;
  if (b.s.run_psi) {
    log_msg(2, "running psi cross-check");
    psi_gap = run_psi_into(b, limit_trace, out + "/psi");
  }

  analysis::Window window =
      analysis::Window::central_fraction(b.grid, b.s.analysis.window_fraction);
  analysis::SweepReport report;
  for (std::size_t i = 0; i < eps.size(); ++i)
    report.rows.push_back(analysis::compare_runs(eps_traces[i], limit_trace, b.grid, window,
                                                 b.s.analysis.mass_quantile));
  report.fit_orders();
  write_sweep_report_csv(out + "/sweep_report.csv", report);

  json manifest;
  manifest["version"] = kVersion;
  manifest["kind"] = "sweep";
  manifest["scenario"] = scenario_to_json(b.s);
  json runs = json::array();
  for (double e : eps) runs.push_back({{"eps", e}, {"dir", eps_dir_name(e)}});
  manifest["runs"] = runs;
  manifest["limit_dir"] = "limit";
  if (b.s.run_psi) {
    manifest["psi_dir"] = "psi";
    manifest["psi_reconstruction_gap"] = psi_gap;
  }
  manifest["report"] = "sweep_report.csv";
  manifest["fitted_orders"] = {{"sup_norm_gap", report.gap_order},
                               {"I_gap_L1", report.igap_order},
                               {"concentration_width", report.width_order}};
  manifest["window"] = {{"x_lo", window.x_lo}, {"x_hi", window.x_hi}};
  write_json(out + "/sweep_manifest.json", manifest);
}

int dispatch(const BuiltScenario& b, const std::string& out, const GlobalOptions& opts) {
  if (b.s.solver == "eps") {
    run_eps_into(b, b.s.eps.front(), out);
  } else if (b.s.solver == "limit") {
    run_limit_into(b, out);
  } else if (b.s.solver == "psi") {
    hj::LimitTrace direct = run_limit_into(b, out + "/limit");
    double gap = run_psi_into(b, direct, out + "/psi");
    json manifest;
    manifest["version"] = kVersion;
    manifest["kind"] = "psi_pair";
    manifest["scenario"] = scenario_to_json(b.s);
    manifest["limit_dir"] = "limit";
    manifest["psi_dir"] = "psi";
    manifest["psi_reconstruction_gap"] = gap;
    write_json(out + "/manifest.json", manifest);
  } else {
    run_sweep(b, out, opts);
  }
  return kExitOk;
}

ModelValidation validate_built(const BuiltScenario& b) {
  return validate_model(b.model, b.grid, b.s.tol.boundary_tol, 64, b.s.seed);
}
}  // namespace

int run_scenario(const std::string& path, const GlobalOptions& opts) {
  std::string out;
  try {
    Scenario s = parse_scenario_file(path);
    if (!opts.out_override.empty()) s.out = opts.out_override;
    if (opts.has_seed_override) s.seed = opts.seed_override;
    BuiltScenario b(std::move(s));
    ModelValidation mv = validate_built(b);
    for (const auto& w : mv.warnings) log_msg(1, w);
    if (!mv.hard_ok()) {
      for (const auto& e : mv.errors) log_msg(0, e);
      return kExitConfig;
    }
    out = b.s.out;
    fs::create_directories(out);
    return dispatch(b, out, opts);
  } catch (const ConfigError& e) {
    log_msg(0, e.what());
    write_error_report(out, kExitConfig, e.what());
    return kExitConfig;
  } catch (const pde::BlowUpError& e) {
    log_msg(0, e.what());
    write_error_report(out, kExitBlowUp, e.what());
    return kExitBlowUp;
  } catch (const metastable::NonConvergenceError& e) {
    log_msg(0, e.what());
    write_error_report(out, kExitNonConvergence, e.what());
    return kExitNonConvergence;
  } catch (const Error& e) {
    log_msg(0, e.what());
    write_error_report(out, kExitConfig, e.what());
    return kExitConfig;
  }
}

int validate_scenario(const std::string& path, const GlobalOptions& opts) {
  try {
    Scenario s = parse_scenario_file(path);
    if (opts.has_seed_override) s.seed = opts.seed_override;
    BuiltScenario b(std::move(s));
    ModelValidation mv = validate_built(b);
    std::printf("scenario: %s\n", b.s.name.c_str());
    std::printf("schema: ok\n");
    std::printf("boundeta decay: %s (envelope %s / %s at the ends, tol %s)\n",
                mv.decay_ok ? "ok" : "FAIL", format_double(mv.envelope_left).c_str(),
                format_double(mv.envelope_right).c_str(),
                format_double(b.s.tol.boundary_tol).c_str());
    std::printf("root count (sampled): %s (worst %d, kbar %d)\n",
                mv.roots_ok ? "ok" : "warning", mv.worst_sign_changes, b.model.kbar());
    std::printf("invertibility (sampled): %s (hadamard %s)\n",
                mv.invertibility_ok ? "ok" : "warning",
                format_double(mv.worst_hadamard).c_str());
    for (const auto& w : mv.warnings) std::printf("warning: %s\n", w.c_str());
    for (const auto& e : mv.errors) std::printf("error: %s\n", e.c_str());
    std::printf("validation: %s\n", mv.hard_ok() ? "PASS" : "FAIL");
    return mv.hard_ok() ? kExitOk : kExitConfig;
  } catch (const Error& e) {
    log_msg(0, e.what());
    std::printf("validation: FAIL (%s)\n", e.what());
    return kExitConfig;
  }
}

int sweep_scenario(const std::string& path, const GlobalOptions& opts) {
  try {
    Scenario probe = parse_scenario_file(path);
    if (probe.solver != "sweep")
      throw ConfigError("sweep: scenario solver must be 'sweep', got '" + probe.solver + "'");
  } catch (const ConfigError& e) {
    log_msg(0, e.what());
    return kExitConfig;
  }
  return run_scenario(path, opts);
}

int report_sweep_dir(const std::string& dir, const GlobalOptions& opts) {
  (void)opts;
  try {
    json manifest = read_json(dir + "/sweep_manifest.json");
    Scenario s = parse_scenario_json(manifest.at("scenario"), dir);
    TraitGrid grid = build_grid(s);
    analysis::Window window =
        analysis::Window::central_fraction(grid, s.analysis.window_fraction);

    auto load_snapshots = [&](const std::string& run_dir, const json& man) {
      std::vector<Snapshot> snaps;
      for (const auto& e : man.at("artifacts").at("snapshots")) {
        auto cols = read_csv_columns(run_dir + "/" + e.at("file").get<std::string>(), 2);
        snaps.push_back(Snapshot{e.at("t").get<double>(), std::move(cols[1])});
      }
      return snaps;
    };
    auto load_series = [&](const std::string& run_dir, int k, std::vector<double>& times,
                           std::vector<std::vector<double>>& I,
                           std::vector<double>& mass) {
      SeriesArtifact art = read_series_csv(run_dir + "/series.csv");
      times = art.columns.at(0);
      I.assign(static_cast<std::size_t>(k), {});
      for (int i = 0; i < k; ++i) I[static_cast<std::size_t>(i)] = art.columns.at(1 + i);
      mass = art.columns.at(1 + static_cast<std::size_t>(k));
    };

    const int k = static_cast<int>(s.resources.size());
    std::string limit_dir = dir + "/" + manifest.at("limit_dir").get<std::string>();
    hj::LimitTrace limit;
    load_series(limit_dir, k, limit.times, limit.I_series, limit.mass_series);
    limit.phi_snapshots = load_snapshots(limit_dir, read_json(limit_dir + "/manifest.json"));
    for (const auto& f : read_measure_log(limit_dir + "/measures.log"))
      limit.measure_frames.push_back(f);

    analysis::SweepReport report;
    for (const auto& run : manifest.at("runs")) {
      std::string run_dir = dir + "/" + run.at("dir").get<std::string>();
      pde::EpsTrace trace;
      trace.eps = run.at("eps").get<double>();
      load_series(run_dir, k, trace.times, trace.I_series, trace.mass_series);
      trace.snapshots = load_snapshots(run_dir, read_json(run_dir + "/manifest.json"));
      report.rows.push_back(
          analysis::compare_runs(trace, limit, grid, window, s.analysis.mass_quantile));
    }
    report.fit_orders();
    write_sweep_report_csv(dir + "/sweep_report.csv", report);

    std::printf("eps        sup_norm_gap   I_gap_L1       conc_width\n");
    for (const auto& r : report.rows)
      std::printf("%-10g %-14g %-14g %-14g\n", r.eps, r.sup_norm_gap, r.I_gap_L1,
                  r.concentration_width);
    std::printf("fitted orders: gap %.3f, I gap %.3f, width %.3f\n", report.gap_order,
                report.igap_order, report.width_order);
    return kExitOk;
  } catch (const Error& e) {
    log_msg(0, e.what());
    return kExitConfig;
  }
}

}  // namespace evolim::cli
