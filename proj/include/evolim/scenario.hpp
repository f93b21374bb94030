#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "evolim/grid.hpp"
#include "evolim/kernel.hpp"
#include "evolim/pde.hpp"
#include "evolim/resources.hpp"

namespace evolim::cli {

// Declarative run description, parsed strictly: unknown keys are rejected and
// all physical parameters must be finite and in range.
struct KernelSpec {
  std::string family = "cos2";  // cos2 | triangle | poly2 | table
  double support_radius = 1.0;
  int resolution = 129;
  std::string path;  // table samples (CSV z,K) for family == "table"
};

struct ResourceSpec {
  std::string family = "gaussian";  // gaussian | table
  double amplitude = 1.0;
  double center = 0.0;
  double width = 1.0;
  std::string path;  // CSV x,eta for family == "table"
};

struct InitialSpec {
  std::string profile = "well";  // well | double_well | table
  double x0 = 0.0;
  double x1 = 2.0;
  std::string path;  // snapshot CSV (x,phi[,u]) for profile == "table"
};

struct ToleranceSpec {
  double cert_tol = 1e-6;
  double prune_tol = 1e-10;
  double overflow_guard = 500.0;
  double phi_barrier = 20.0;
  double boundary_tol = 1e-2;
};

struct AnalysisSpec {
  double window_fraction = 0.8;
  double mass_quantile = 0.99;
};

struct AuditSpec {
  int audit_every = 1;
  double margin = 1.5;
};

struct Scenario {
  std::string name;
  std::string solver;  // eps | limit | psi | sweep
  double x_min = -10.0, x_max = 10.0;
  int n = 1601;
  KernelSpec kernel;
  std::vector<ResourceSpec> resources;
  int kbar = 0;  // 0: default 2k
  InitialSpec initial;
  std::vector<double> eps;
  double t_end = 1.0;
  double dt = 0.0;
  double cfl = 0.5;
  int n_frames = 11;
  double zero_band = 0.0;
  double lf_lambda = 0.0;
  bool run_psi = false;
  ToleranceSpec tol;
  AnalysisSpec analysis;
  AuditSpec audit;
  std::uint64_t seed = 0;
  std::string out = "out";
};

Scenario parse_scenario_json(const nlohmann::json& j, const std::string& base_dir);
Scenario parse_scenario_file(const std::string& path);
nlohmann::json scenario_to_json(const Scenario& s);

TraitGrid build_grid(const Scenario& s);
MutationKernel build_kernel(const Scenario& s);
ResourceModel build_model(const Scenario& s);
std::vector<double> build_initial_phi(const Scenario& s, const TraitGrid& grid);
std::vector<double> snapshot_times(const Scenario& s);

}  // namespace evolim::cli
