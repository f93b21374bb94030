#include "evolim/artifacts.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "evolim/errors.hpp"

namespace evolim::cli {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::vector<double>> read_csv_columns(const std::string& path,
                                                  std::size_t min_columns) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read CSV file: " + path);
  std::vector<std::vector<double>> cols;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (first) {
      // header row: non-numeric first cell
      first = false;
      char* end = nullptr;
      std::strtod(cells.empty() ? "" : cells[0].c_str(), &end);
      bool numeric = end && *end == '\0' && !cells[0].empty();
      cols.resize(cells.size());
      if (!numeric) continue;
    }
    if (cells.size() != cols.size())
      throw ConfigError("ragged CSV row in " + path);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      char* end = nullptr;
      double v = std::strtod(cells[c].c_str(), &end);
      if (!end || *end != '\0') throw ConfigError("non-numeric CSV cell in " + path);
      cols[c].push_back(v);
    }
  }
  if (cols.size() < min_columns)
    throw ConfigError(path + ": expected at least " + std::to_string(min_columns) +
                      " columns");
  if (cols.empty() || cols[0].empty()) throw ConfigError(path + ": no data rows");
  return cols;
}

void write_series_csv(const std::string& path, const std::vector<double>& times,
                      const std::vector<std::vector<double>>& I_series,
                      const std::vector<double>& mass, const std::vector<double>& sup_phi,
                      const std::vector<double>& lipschitz,
                      const std::vector<double>& semiconvexity) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << "t";
  for (std::size_t i = 0; i < I_series.size(); ++i) out << ",I_" << (i + 1);
  out << ",mass,sup_phi,lipschitz,semiconvexity\n";
  for (std::size_t m = 0; m < times.size(); ++m) {
    out << format_double(times[m]);
    for (const auto& s : I_series) out << ',' << format_double(s[m]);
    out << ',' << format_double(mass[m]) << ',' << format_double(sup_phi[m]) << ','
        << format_double(lipschitz[m]) << ',' << format_double(semiconvexity[m]) << '\n';
  }
}

SeriesArtifact read_series_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  std::string header;
  if (!std::getline(in, header)) throw ConfigError(path + ": empty file");
  SeriesArtifact art;
  {
    std::stringstream ss(header);
    std::string cell;
    while (std::getline(ss, cell, ',')) art.header.push_back(cell);
  }
  art.columns.resize(art.header.size());
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t c = 0;
    while (std::getline(ss, cell, ',')) {
      if (c >= art.columns.size()) throw ConfigError(path + ": ragged row");
      art.columns[c++].push_back(std::strtod(cell.c_str(), nullptr));
    }
    if (c != art.columns.size()) throw ConfigError(path + ": ragged row");
  }
  return art;
}

void write_snapshot_csv(const std::string& path, const TraitGrid& grid,
                        const std::vector<double>& phi, double eps_or_zero) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << (eps_or_zero > 0.0 ? "x,phi,u\n" : "x,phi\n");
  for (int j = 0; j < grid.n; ++j) {
    out << format_double(grid.node(j)) << ','
        << format_double(phi[static_cast<std::size_t>(j)]);
    if (eps_or_zero > 0.0)
      out << ',' << format_double(std::exp(phi[static_cast<std::size_t>(j)] / eps_or_zero));
    out << '\n';
  }
}

void write_measure_log(const std::string& path, const std::vector<hj::MeasureFrame>& frames) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  for (const auto& f : frames) {
    const auto& c = f.certificate;
    out << "t=" << format_double(f.t) << " pass=" << (c.passed() ? 1 : 0)
        << " degenerate=" << (c.degenerate ? 1 : 0)
        << " entropy=" << format_double(c.entropy_value)
        << " violation=" << format_double(c.max_violation_on_omega)
        << " residual=" << format_double(c.max_residual_on_support) << " I=[";
    for (int i = 0; i < c.resources.k(); ++i)
      out << (i ? " " : "") << format_double(c.resources[i]);
    out << "] atoms=[";
    for (std::size_t l = 0; l < c.measure.atoms.size(); ++l)
      out << (l ? " " : "") << '(' << format_double(c.measure.atoms[l].x) << ' '
          << format_double(c.measure.atoms[l].weight) << ')';
    out << "]\n";
  }
}

namespace {
double parse_field(const std::string& line, const std::string& key) {
  auto pos = line.find(key + "=");
  if (pos == std::string::npos)
    throw ConfigError("measure log: missing field " + key);
  return std::strtod(line.c_str() + pos + key.size() + 1, nullptr);
}

std::string bracket_payload(const std::string& line, const std::string& key) {
  auto pos = line.find(key + "=[");
  if (pos == std::string::npos) throw ConfigError("measure log: missing field " + key);
  auto start = pos + key.size() + 2;
  auto end = line.find(']', start);
  if (end == std::string::npos) throw ConfigError("measure log: unterminated " + key);
  return line.substr(start, end - start);
}
}  // namespace

std::vector<hj::MeasureFrame> read_measure_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  std::vector<hj::MeasureFrame> frames;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    hj::MeasureFrame f;
    f.t = parse_field(line, "t");
    f.certificate.entropy_value = parse_field(line, "entropy");
    f.certificate.max_violation_on_omega = parse_field(line, "violation");
    f.certificate.max_residual_on_support = parse_field(line, "residual");
    f.certificate.degenerate = parse_field(line, "degenerate") != 0.0;
    {
      std::stringstream ss(bracket_payload(line, "I"));
      double v;
      std::vector<double> I;
      while (ss >> v) I.push_back(v);
      f.certificate.resources = ResourceVector(std::move(I));
    }
    {
      std::string atoms = bracket_payload(line, "atoms");
      for (std::size_t p = 0; p < atoms.size();) {
        auto open = atoms.find('(', p);
        if (open == std::string::npos) break;
        auto close = atoms.find(')', open);
        std::stringstream ss(atoms.substr(open + 1, close - open - 1));
        Atom a;
        ss >> a.x >> a.weight;
        f.certificate.measure.atoms.push_back(a);
        p = close + 1;
      }
    }
    frames.push_back(std::move(f));
  }
  return frames;
}

void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << j.dump(2) << '\n';
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return j;
}

void write_sweep_report_csv(const std::string& path, const analysis::SweepReport& report) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << "eps,sup_norm_gap,I_gap_L1,mass_min,mass_max,concentration_width\n";
  for (const auto& r : report.rows)
    out << format_double(r.eps) << ',' << format_double(r.sup_norm_gap) << ','
        << format_double(r.I_gap_L1) << ',' << format_double(r.mass_min) << ','
        << format_double(r.mass_max) << ',' << format_double(r.concentration_width) << '\n';
}

nlohmann::json audit_report_to_json(const pde::AuditReport& report) {
  nlohmann::json items = nlohmann::json::array();
  for (const auto& it : report.items)
    items.push_back({{"name", it.name},
                     {"pass", it.pass},
                     {"observed", it.observed},
                     {"bound", it.bound}});
  return {{"all_pass", report.all_pass}, {"items", items}};
}

}  // namespace evolim::cli
