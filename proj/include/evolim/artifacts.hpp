#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "evolim/analysis.hpp"
#include "evolim/hj.hpp"
#include "evolim/pde.hpp"

namespace evolim::cli {

// All numeric output is printed with %.17g so that artifacts round-trip
// bit-exactly and reruns are byte-identical.
std::string format_double(double v);

// generic CSV with numeric columns; throws ConfigError on malformed input
std::vector<std::vector<double>> read_csv_columns(const std::string& path,
                                                  std::size_t min_columns);

struct SeriesArtifact {
  std::vector<std::string> header;          // t, I_1..I_k, mass, sup_phi, ...
  std::vector<std::vector<double>> columns;  // column-major
};

void write_series_csv(const std::string& path, const std::vector<double>& times,
                      const std::vector<std::vector<double>>& I_series,
                      const std::vector<double>& mass, const std::vector<double>& sup_phi,
                      const std::vector<double>& lipschitz,
                      const std::vector<double>& semiconvexity);
SeriesArtifact read_series_csv(const std::string& path);

// snapshot CSV: x, phi and optionally u = exp(phi/eps)
void write_snapshot_csv(const std::string& path, const TraitGrid& grid,
                        const std::vector<double>& phi, double eps_or_zero);

// time-stamped atoms and certificates, one line per frame
void write_measure_log(const std::string& path, const std::vector<hj::MeasureFrame>& frames);
std::vector<hj::MeasureFrame> read_measure_log(const std::string& path);

void write_json(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json(const std::string& path);

void write_sweep_report_csv(const std::string& path, const analysis::SweepReport& report);

nlohmann::json audit_report_to_json(const pde::AuditReport& report);

}  // namespace evolim::cli
