#include "evolim/scenario.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "evolim/artifacts.hpp"
#include "evolim/errors.hpp"
#include "evolim/numerics.hpp"

namespace evolim::cli {

namespace {
using nlohmann::json;

// strict object reader: every key must be consumed
class Obj {
 public:
  Obj(const json& j, std::string ctx) : j_(j), ctx_(std::move(ctx)) {
    if (!j_.is_object()) throw ConfigError(ctx_ + ": expected an object");
  }
  ~Obj() = default;

  bool has(const std::string& key) {
    return j_.contains(key);
  }
  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }
  template <typename T>
  T require(const std::string& key) {
    if (!j_.contains(key)) throw ConfigError(ctx_ + ": missing required key '" + key + "'");
    return get_as<T>(key);
  }
  template <typename T>
  T optional(const std::string& key, T fallback) {
    if (!j_.contains(key)) return fallback;
    return get_as<T>(key);
  }
  void finish() {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key()))
        throw ConfigError(ctx_ + ": unknown key '" + it.key() + "'");
  }

 private:
  template <typename T>
  T get_as(const std::string& key) {
    seen_.insert(key);
    try {
      return j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(ctx_ + ": key '" + key + "' has the wrong type");
    }
  }
  const json& j_;
  std::string ctx_;
  std::set<std::string> seen_;
};

void check_finite(double v, const std::string& what) {
  if (!std::isfinite(v)) throw ConfigError(what + " must be finite");
}

std::string resolve_path(const std::string& path, const std::string& base_dir) {
  if (path.empty() || base_dir.empty()) return path;
  std::filesystem::path p(path);
  if (p.is_absolute()) return path;
  return (std::filesystem::path(base_dir) / p).string();
}
}  // namespace

Scenario parse_scenario_json(const json& j, const std::string& base_dir) {
  Scenario s;
  Obj root(j, "scenario");
  s.name = root.require<std::string>("name");
  s.solver = root.require<std::string>("solver");
  if (s.solver != "eps" && s.solver != "limit" && s.solver != "psi" && s.solver != "sweep")
    throw ConfigError("scenario: solver must be one of eps|limit|psi|sweep");

  {
    Obj g(root.raw("grid"), "grid");
    s.x_min = g.require<double>("x_min");
    s.x_max = g.require<double>("x_max");
    s.n = g.require<int>("n");
    g.finish();
    check_finite(s.x_min, "grid.x_min");
    check_finite(s.x_max, "grid.x_max");
    if (!(s.x_max > s.x_min)) throw ConfigError("grid: x_max must exceed x_min");
    if (s.n < 3 || s.n > 50'000'000) throw ConfigError("grid: n out of range");
  }
  {
    Obj k(root.raw("kernel"), "kernel");
    s.kernel.family = k.optional<std::string>("family", "cos2");
    s.kernel.support_radius = k.require<double>("support_radius");
    s.kernel.resolution = k.optional<int>("resolution", 129);
    s.kernel.path = resolve_path(k.optional<std::string>("path", ""), base_dir);
    k.finish();
    check_finite(s.kernel.support_radius, "kernel.support_radius");
    if (!(s.kernel.support_radius > 0.0))
      throw ConfigError("kernel: support_radius must be > 0");
    if (s.kernel.family == "table" && s.kernel.path.empty())
      throw ConfigError("kernel: family 'table' needs a path");
  }
  {
    const json& arr = root.raw("resources");
    if (!arr.is_array() || arr.empty())
      throw ConfigError("resources: expected a nonempty array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      Obj r(arr[i], "resources[" + std::to_string(i) + "]");
      ResourceSpec spec;
      spec.family = r.optional<std::string>("family", "gaussian");
      if (spec.family == "gaussian") {
        spec.amplitude = r.require<double>("amplitude");
        spec.center = r.require<double>("center");
        spec.width = r.require<double>("width");
        check_finite(spec.amplitude, "resource amplitude");
        check_finite(spec.center, "resource center");
        check_finite(spec.width, "resource width");
        if (!(spec.amplitude > 0.0) || !(spec.width > 0.0))
          throw ConfigError("resources: amplitude and width must be > 0");
      } else if (spec.family == "table") {
        spec.path = resolve_path(r.require<std::string>("path"), base_dir);
      } else {
        throw ConfigError("resources: unknown family '" + spec.family + "'");
      }
      r.finish();
      s.resources.push_back(std::move(spec));
    }
  }
  s.kbar = root.optional<int>("kbar", 0);
  if (s.kbar < 0) throw ConfigError("kbar must be >= 0");
  {
    Obj ini(root.raw("initial"), "initial");
    s.initial.profile = ini.optional<std::string>("profile", "well");
    s.initial.x0 = ini.optional<double>("x0", 0.0);
    s.initial.x1 = ini.optional<double>("x1", 2.0);
    s.initial.path = resolve_path(ini.optional<std::string>("path", ""), base_dir);
    ini.finish();
    check_finite(s.initial.x0, "initial.x0");
    check_finite(s.initial.x1, "initial.x1");
    if (s.initial.profile == "table" && s.initial.path.empty())
      throw ConfigError("initial: profile 'table' needs a path");
  }
  if (root.has("eps")) {
    for (const auto& e : root.raw("eps")) {
      double v = e.get<double>();
      check_finite(v, "eps");
      if (!(v > 0.0) || v > 10.0) throw ConfigError("eps values must lie in (0, 10]");
      s.eps.push_back(v);
    }
  }
  if ((s.solver == "eps" || s.solver == "sweep") && s.eps.empty())
    throw ConfigError("scenario: solver '" + s.solver + "' needs an eps list");
  if (s.solver == "eps" && s.eps.size() != 1)
    throw ConfigError("scenario: solver 'eps' takes exactly one eps (use 'sweep' for lists)");

  s.t_end = root.require<double>("t_end");
  check_finite(s.t_end, "t_end");
  if (!(s.t_end > 0.0)) throw ConfigError("t_end must be > 0");
  s.dt = root.optional<double>("dt", 0.0);
  check_finite(s.dt, "dt");
  if (s.dt < 0.0) throw ConfigError("dt must be >= 0 (0 means automatic)");
  s.cfl = root.optional<double>("cfl", 0.5);
  check_finite(s.cfl, "cfl");
  if (!(s.cfl > 0.0 && s.cfl <= 1.0)) throw ConfigError("cfl must lie in (0, 1]");
  s.n_frames = root.optional<int>("n_frames", 11);
  if (s.n_frames < 2 || s.n_frames > 100000) throw ConfigError("n_frames out of range [2, 1e5]");
  s.zero_band = root.optional<double>("zero_band", 0.0);
  check_finite(s.zero_band, "zero_band");
  if (s.zero_band < 0.0) throw ConfigError("zero_band must be >= 0");
  s.lf_lambda = root.optional<double>("lf_lambda", 0.0);
  check_finite(s.lf_lambda, "lf_lambda");
  if (s.lf_lambda < 0.0) throw ConfigError("lf_lambda must be >= 0");
  s.run_psi = root.optional<bool>("run_psi", false);

  if (root.has("tolerances")) {
    Obj t(root.raw("tolerances"), "tolerances");
    s.tol.cert_tol = t.optional<double>("cert_tol", s.tol.cert_tol);
    s.tol.prune_tol = t.optional<double>("prune_tol", s.tol.prune_tol);
    s.tol.overflow_guard = t.optional<double>("overflow_guard", s.tol.overflow_guard);
    s.tol.phi_barrier = t.optional<double>("phi_barrier", s.tol.phi_barrier);
    s.tol.boundary_tol = t.optional<double>("boundary_tol", s.tol.boundary_tol);
    t.finish();
    if (!(s.tol.cert_tol > 0.0) || !(s.tol.prune_tol > 0.0) ||
        !(s.tol.overflow_guard > 1.0) || !(s.tol.phi_barrier > 0.0) ||
        !(s.tol.boundary_tol > 0.0))
      throw ConfigError("tolerances must be positive");
  }
  if (root.has("analysis")) {
    Obj a(root.raw("analysis"), "analysis");
    s.analysis.window_fraction = a.optional<double>("window_fraction", 0.8);
    s.analysis.mass_quantile = a.optional<double>("mass_quantile", 0.99);
    a.finish();
    if (!(s.analysis.window_fraction > 0.0 && s.analysis.window_fraction <= 1.0))
      throw ConfigError("analysis.window_fraction must lie in (0, 1]");
    if (!(s.analysis.mass_quantile > 0.0 && s.analysis.mass_quantile < 1.0))
      throw ConfigError("analysis.mass_quantile must lie in (0, 1)");
  }
  if (root.has("audit")) {
    Obj a(root.raw("audit"), "audit");
    s.audit.audit_every = a.optional<int>("audit_every", 1);
    s.audit.margin = a.optional<double>("margin", 1.5);
    a.finish();
    if (s.audit.audit_every < 1) throw ConfigError("audit.audit_every must be >= 1");
    if (!(s.audit.margin >= 1.0)) throw ConfigError("audit.margin must be >= 1");
  }
  s.seed = root.optional<std::uint64_t>("seed", 0);
  s.out = root.optional<std::string>("out", "out");
  root.finish();
  return s;
}

Scenario parse_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read scenario file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario parse error: ") + e.what());
  }
  return parse_scenario_json(j, std::filesystem::path(path).parent_path().string());
}

json scenario_to_json(const Scenario& s) {
  json j;
  j["name"] = s.name;
  j["solver"] = s.solver;
  j["grid"] = {{"x_min", s.x_min}, {"x_max", s.x_max}, {"n", s.n}};
  json k = {{"family", s.kernel.family},
            {"support_radius", s.kernel.support_radius},
            {"resolution", s.kernel.resolution}};
  if (!s.kernel.path.empty()) k["path"] = s.kernel.path;
  j["kernel"] = k;
  json arr = json::array();
  for (const auto& r : s.resources) {
    json e;
    e["family"] = r.family;
    if (r.family == "gaussian") {
      e["amplitude"] = r.amplitude;
      e["center"] = r.center;
      e["width"] = r.width;
    } else {
      e["path"] = r.path;
    }
    arr.push_back(e);
  }
  j["resources"] = arr;
  j["kbar"] = s.kbar;
  json ini = {{"profile", s.initial.profile}, {"x0", s.initial.x0}, {"x1", s.initial.x1}};
  if (!s.initial.path.empty()) ini["path"] = s.initial.path;
  j["initial"] = ini;
  j["eps"] = s.eps;
  j["t_end"] = s.t_end;
  j["dt"] = s.dt;
  j["cfl"] = s.cfl;
  j["n_frames"] = s.n_frames;
  j["zero_band"] = s.zero_band;
  j["lf_lambda"] = s.lf_lambda;
  j["run_psi"] = s.run_psi;
  j["tolerances"] = {{"cert_tol", s.tol.cert_tol},
                     {"prune_tol", s.tol.prune_tol},
                     {"overflow_guard", s.tol.overflow_guard},
                     {"phi_barrier", s.tol.phi_barrier},
                     {"boundary_tol", s.tol.boundary_tol}};
  j["analysis"] = {{"window_fraction", s.analysis.window_fraction},
                   {"mass_quantile", s.analysis.mass_quantile}};
  j["audit"] = {{"audit_every", s.audit.audit_every}, {"margin", s.audit.margin}};
  j["seed"] = s.seed;
  j["out"] = s.out;
  return j;
}

TraitGrid build_grid(const Scenario& s) { return TraitGrid(s.x_min, s.x_max, s.n); }

MutationKernel build_kernel(const Scenario& s) {
  if (s.kernel.family == "table") {
    auto cols = read_csv_columns(s.kernel.path, 2);
    // resample onto the uniform node set
    std::vector<double> samples(static_cast<std::size_t>(s.kernel.resolution));
    double dz = 2.0 * s.kernel.support_radius / (s.kernel.resolution - 1);
    for (int q = 0; q < s.kernel.resolution; ++q) {
      double z = -s.kernel.support_radius + q * dz;
      samples[static_cast<std::size_t>(q)] = interp_table(cols[0], cols[1], z);
    }
    samples.front() = 0.0;
    samples.back() = 0.0;
    return MutationKernel::from_samples(s.kernel.support_radius, std::move(samples));
  }
  return MutationKernel::from_family(s.kernel.family, s.kernel.support_radius,
                                     s.kernel.resolution);
}

ResourceModel build_model(const Scenario& s) {
  std::vector<GrowthFunction> eta;
  for (const auto& r : s.resources) {
    if (r.family == "gaussian") {
      eta.push_back(GrowthFunction::gaussian(r.amplitude, r.center, r.width));
    } else {
      auto cols = read_csv_columns(r.path, 2);
      eta.push_back(GrowthFunction::table(std::move(cols[0]), std::move(cols[1])));
    }
  }
  return ResourceModel(std::move(eta), s.kbar);
}

std::vector<double> build_initial_phi(const Scenario& s, const TraitGrid& grid) {
  pde::InitialProfile prof;
  prof.name = s.initial.profile;
  prof.x0 = s.initial.x0;
  prof.x1 = s.initial.x1;
  if (prof.name == "table") {
    auto cols = read_csv_columns(s.initial.path, 2);
    prof.table_x = std::move(cols[0]);
    prof.table_phi = std::move(cols[1]);
  }
  return pde::initial_profile(prof, grid, s.tol.phi_barrier);
}

std::vector<double> snapshot_times(const Scenario& s) {
  std::vector<double> times(static_cast<std::size_t>(s.n_frames));
  for (int f = 0; f < s.n_frames; ++f)
    times[static_cast<std::size_t>(f)] = s.t_end * f / (s.n_frames - 1);
  return times;
}

}  // namespace evolim::cli
