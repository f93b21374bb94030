#include <clocale>
#include <string>

#include <CLI11.hpp>

#include "evolim/errors.hpp"
#include "evolim/runner.hpp"
#include "evolim/version.hpp"

int main(int argc, char** argv) {
  std::setlocale(LC_NUMERIC, "C");

  CLI::App app{"evolim - chemostat trait dynamics: eps-scaled solver, constrained "
               "Hamilton-Jacobi limit and their cross-validation"};
  app.set_version_flag("--version", evolim::kVersion);
  app.require_subcommand(1);

  evolim::cli::GlobalOptions opts;
  app.add_option("--out", opts.out_override, "output directory (overrides the scenario)")
      ->envname("EVOLIM_OUT");
  app.add_option("--threads", opts.threads, "worker threads for sweeps (0 = auto)")
      ->envname("EVOLIM_THREADS");
  app.add_option("--log-level", opts.log_level, "quiet|error|warn|info|debug")
      ->envname("EVOLIM_LOG_LEVEL");
  std::string seed_str;
  app.add_option("--seed", seed_str, "seed override for sampled validation checks")
      ->envname("EVOLIM_SEED");

  std::string run_path, validate_path, sweep_path, report_dir;
  CLI::App* cmd_run = app.add_subcommand("run", "execute a scenario file");
  cmd_run->add_option("scenario", run_path, "scenario file")->required();
  CLI::App* cmd_validate =
      app.add_subcommand("validate", "schema and model checks without solving");
  cmd_validate->add_option("scenario", validate_path, "scenario file")->required();
  CLI::App* cmd_sweep = app.add_subcommand("sweep", "execute an eps-sweep scenario");
  cmd_sweep->add_option("scenario", sweep_path, "scenario file")->required();
  CLI::App* cmd_report =
      app.add_subcommand("report", "recompute the sweep report from artifacts");
  cmd_report->add_option("dir", report_dir, "sweep output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    evolim::cli::set_log_level(opts.log_level);
    if (!seed_str.empty()) {
      opts.has_seed_override = true;
      opts.seed_override = std::stoull(seed_str);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "[error] %s\n", e.what());
    return evolim::cli::kExitConfig;
  }

  if (cmd_run->parsed()) return evolim::cli::run_scenario(run_path, opts);
  if (cmd_validate->parsed()) return evolim::cli::validate_scenario(validate_path, opts);
  if (cmd_sweep->parsed()) return evolim::cli::sweep_scenario(sweep_path, opts);
  if (cmd_report->parsed()) return evolim::cli::report_sweep_dir(report_dir, opts);
  return evolim::cli::kExitConfig;
}
