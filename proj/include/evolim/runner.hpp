#pragma once

#include <cstdint>
#include <string>

#include "evolim/scenario.hpp"

namespace evolim::cli {

// exit codes shared by the CLI and the in-process test harness
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitBlowUp = 3;
inline constexpr int kExitNonConvergence = 4;

struct GlobalOptions {
  std::string out_override;       // --out
  int threads = 0;                // --threads, 0 = auto
  std::string log_level = "info"; // quiet | error | warn | info | debug
  bool has_seed_override = false;
  std::uint64_t seed_override = 0;
};

void set_log_level(const std::string& level);
void log_msg(int level, const std::string& msg);  // 0 error .. 3 debug

// Execute a scenario file end to end; returns the exit code and writes
// artifacts under the resolved output directory.
int run_scenario(const std::string& path, const GlobalOptions& opts);

// Schema plus model checks without running any solver.
int validate_scenario(const std::string& path, const GlobalOptions& opts);

// Like run_scenario but insists on solver == "sweep".
int sweep_scenario(const std::string& path, const GlobalOptions& opts);

// Recompute the sweep report from the artifacts in a sweep output directory.
int report_sweep_dir(const std::string& dir, const GlobalOptions& opts);

}  // namespace evolim::cli
