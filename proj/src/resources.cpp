#include "evolim/resources.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "evolim/errors.hpp"
#include "evolim/numerics.hpp"

namespace evolim {

GrowthFunction GrowthFunction::gaussian(double amplitude, double center, double width) {
  if (!(amplitude > 0.0) || !(width > 0.0) || !std::isfinite(center))
    throw InvalidInputError("GrowthFunction::gaussian: need amplitude > 0, width > 0");
  GrowthFunction f;
  f.kind_ = Kind::Gaussian;
  f.a_ = amplitude;
  f.c_ = center;
  f.w_ = width;
  return f;
}

GrowthFunction GrowthFunction::table(std::vector<double> xs, std::vector<double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw InvalidInputError("GrowthFunction::table: need >= 2 samples");
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!std::isfinite(xs[i]) || !std::isfinite(ys[i]) || ys[i] < 0.0)
      throw InvalidInputError("GrowthFunction::table: samples must be finite and >= 0");
    if (i > 0 && !(xs[i] > xs[i - 1]))
      throw InvalidInputError("GrowthFunction::table: x must be strictly increasing");
  }
  GrowthFunction f;
  f.kind_ = Kind::Table;
  f.xs_ = std::move(xs);
  f.ys_ = std::move(ys);
  return f;
}

double GrowthFunction::value(double x) const {
  if (kind_ == Kind::Gaussian) {
    double s = (x - c_) / w_;
    return a_ * std::exp(-s * s);
  }
  return interp_table(xs_, ys_, x);
}

double GrowthFunction::deriv(double x) const {
  if (kind_ == Kind::Gaussian) {
    double s = (x - c_) / w_;
    return -2.0 * s / w_ * a_ * std::exp(-s * s);
  }
  // secant slope of the interpolant's segment
  if (x <= xs_.front() || x >= xs_.back()) return 0.0;
  auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
  std::size_t j = static_cast<std::size_t>(it - xs_.begin()) - 1;
  return (ys_[j + 1] - ys_[j]) / (xs_[j + 1] - xs_[j]);
}

double GrowthFunction::deriv2(double x) const {
  if (kind_ == Kind::Gaussian) {
    double s = (x - c_) / w_;
    return a_ * std::exp(-s * s) * (4.0 * s * s - 2.0) / (w_ * w_);
  }
  // interior second difference at the nearest interior node
  if (xs_.size() < 3) return 0.0;
  std::size_t j = 1;
  double best = std::abs(xs_[1] - x);
  for (std::size_t i = 2; i + 1 < xs_.size(); ++i) {
    double d = std::abs(xs_[i] - x);
    if (d < best) { best = d; j = i; }
  }
  double hl = xs_[j] - xs_[j - 1], hr = xs_[j + 1] - xs_[j];
  return 2.0 * (hl * ys_[j + 1] - (hl + hr) * ys_[j] + hr * ys_[j - 1]) /
         (hl * hr * (hl + hr));
}

ResourceModel::ResourceModel(std::vector<GrowthFunction> eta, int kbar)
    : eta_(std::move(eta)), kbar_(kbar) {
  if (eta_.empty()) throw InvalidInputError("ResourceModel: need at least one resource");
  if (kbar_ <= 0) kbar_ = 2 * static_cast<int>(eta_.size());
}

double ResourceModel::envelope(double x) const {
  double s = 0.0;
  for (const auto& f : eta_)
    s += std::abs(f.value(x)) + std::abs(f.deriv(x)) + std::abs(f.deriv2(x));
  return s;
}

double ResourceModel::growth(const ResourceVector& I, double x) const {
  if (I.k() != k()) throw InvalidInputError("growth: resource count mismatch");
  double s = -1.0;
  for (int i = 0; i < k(); ++i) s += I[i] * eta(i, x);
  return s;
}

ResourceTable::ResourceTable(const ResourceModel& model, const TraitGrid& g)
    : grid(g), k(model.k()) {
  eta.resize(static_cast<std::size_t>(k) * g.n);
  log_eta.resize(eta.size());
  envelope.resize(static_cast<std::size_t>(g.n));
  for (int j = 0; j < g.n; ++j) {
    double x = g.node(j);
    envelope[static_cast<std::size_t>(j)] = model.envelope(x);
    sup_envelope = std::max(sup_envelope, envelope[static_cast<std::size_t>(j)]);
    for (int i = 0; i < k; ++i) {
      double v = model.eta(i, x);
      eta[static_cast<std::size_t>(i) * g.n + j] = v;
      log_eta[static_cast<std::size_t>(i) * g.n + j] = v > 0.0 ? std::log(v) : kNegInf;
    }
  }
}

void ResourceTable::growth_field(const ResourceVector& I, std::span<double> out) const {
  if (I.k() != k || static_cast<int>(out.size()) != grid.n)
    throw InvalidInputError("growth_field: size mismatch");
  for (int j = 0; j < grid.n; ++j) {
    double s = -1.0;
    for (int i = 0; i < k; ++i) s += I[i] * at(i, j);
    out[static_cast<std::size_t>(j)] = s;
  }
}

namespace {
ResourceVector response_impl(std::span<const double> u, int k, const TraitGrid& grid,
                             auto&& eta_at) {
  if (static_cast<int>(u.size()) != grid.n)
    throw InvalidInputError("resource_response: field length != grid size");
  for (double v : u)
    if (!std::isfinite(v) || v < 0.0)
      throw InvalidInputError("resource_response: u must be finite and nonnegative");
  ResourceVector I(std::vector<double>(static_cast<std::size_t>(k)));
  for (int i = 0; i < k; ++i) {
    double s = 0.0;
    for (int j = 0; j < grid.n; ++j)
      s += grid.weight(j) * eta_at(i, j) * u[static_cast<std::size_t>(j)];
    I[i] = 1.0 / (1.0 + s);
  }
  return I;
}
}  // namespace

ResourceVector resource_response(std::span<const double> u, const ResourceModel& model,
                                 const TraitGrid& grid) {
  return response_impl(u, model.k(), grid,
                       [&](int i, int j) { return model.eta(i, grid.node(j)); });
}

ResourceVector resource_response(std::span<const double> u, const ResourceTable& table) {
  return response_impl(u, table.k, table.grid, [&](int i, int j) { return table.at(i, j); });
}

namespace {
int sign_changes(std::span<const double> v) {
  int count = 0;
  int prev = 0;
  for (double x : v) {
    int s = (x > 0.0) - (x < 0.0);
    if (s == 0) continue;
    if (prev != 0 && s != prev) ++count;
    prev = s;
  }
  return count;
}

// |det| / product of row norms; ~0 flags a (near-)degenerate matrix
double hadamard_ratio(std::vector<double> m, int dim) {
  double rows = 1.0;
  for (int r = 0; r < dim; ++r) {
    double s = 0.0;
    for (int c = 0; c < dim; ++c) {
      double v = m[static_cast<std::size_t>(r) * dim + c];
      s += v * v;
    }
    rows *= std::sqrt(s);
  }
  if (!(rows > 0.0)) return 0.0;
  // LU with partial pivoting for the determinant
  double det = 1.0;
  for (int c = 0; c < dim; ++c) {
    int piv = c;
    for (int r = c + 1; r < dim; ++r)
      if (std::abs(m[static_cast<std::size_t>(r) * dim + c]) >
          std::abs(m[static_cast<std::size_t>(piv) * dim + c]))
        piv = r;
    if (piv != c) {
      for (int cc = 0; cc < dim; ++cc)
        std::swap(m[static_cast<std::size_t>(piv) * dim + cc],
                  m[static_cast<std::size_t>(c) * dim + cc]);
      det = -det;
    }
    double d = m[static_cast<std::size_t>(c) * dim + c];
    if (d == 0.0) return 0.0;
    det *= d;
    for (int r = c + 1; r < dim; ++r) {
      double f = m[static_cast<std::size_t>(r) * dim + c] / d;
      for (int cc = c; cc < dim; ++cc)
        m[static_cast<std::size_t>(r) * dim + cc] -=
            f * m[static_cast<std::size_t>(c) * dim + cc];
    }
  }
  return std::abs(det) / rows;
}
}  // namespace

ModelValidation validate_model(const ResourceModel& model, const TraitGrid& grid,
                               double boundary_tol, int samples, std::uint64_t seed) {
  ModelValidation rep;
  rep.envelope_left = model.envelope(grid.x_min);
  rep.envelope_right = model.envelope(grid.x_max);
  if (!(rep.envelope_left < boundary_tol) || !(rep.envelope_right < boundary_tol)) {
    rep.decay_ok = false;
    rep.errors.push_back("envelope bound does not decay at the grid ends (got " +
                         std::to_string(rep.envelope_left) + ", " +
                         std::to_string(rep.envelope_right) + ", tol " +
                         std::to_string(boundary_tol) + ")");
  }
  for (int j = 0; j < grid.n; ++j) {
    for (int i = 0; i < model.k(); ++i) {
      if (!(model.eta(i, grid.node(j)) > 0.0)) {
        rep.errors.push_back("eta_" + std::to_string(i + 1) + " not positive at grid node " +
                             std::to_string(j));
        j = grid.n;  // one report is enough
        break;
      }
    }
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const int k = model.k();

  // sampled root-count check: sign changes of sum_i I_i eta_i - 1 on the grid
  std::vector<double> g(static_cast<std::size_t>(grid.n));
  for (int s = 0; s < samples; ++s) {
    ResourceVector I(std::vector<double>(static_cast<std::size_t>(k)));
    for (int i = 0; i < k; ++i) I[i] = unif(rng);
    for (int j = 0; j < grid.n; ++j)
      g[static_cast<std::size_t>(j)] = model.growth(I, grid.node(j));
    rep.worst_sign_changes = std::max(rep.worst_sign_changes, sign_changes(g));
  }
  if (rep.worst_sign_changes > model.kbar()) {
    rep.roots_ok = false;
    rep.warnings.push_back("sampled growth rate has up to " +
                           std::to_string(rep.worst_sign_changes) +
                           " sign changes, configured kbar is " +
                           std::to_string(model.kbar()));
  }

  // sampled invertibility: eta_i(x_j) on random distinct node tuples
  const int dim = std::min(model.kbar(), k);
  if (dim >= 1) {
    std::uniform_int_distribution<int> pick(0, grid.n - 1);
    for (int s = 0; s < samples; ++s) {
      std::vector<int> js;
      while (static_cast<int>(js.size()) < dim) {
        int j = pick(rng);
        if (std::find(js.begin(), js.end(), j) == js.end()) js.push_back(j);
      }
      std::vector<double> m(static_cast<std::size_t>(dim) * dim);
      for (int r = 0; r < dim; ++r)
        for (int c = 0; c < dim; ++c)
          m[static_cast<std::size_t>(r) * dim + c] = model.eta(r, grid.node(js[static_cast<std::size_t>(c)]));
      rep.worst_hadamard = std::min(rep.worst_hadamard, hadamard_ratio(std::move(m), dim));
    }
    if (rep.worst_hadamard < 1e-10) {
      rep.invertibility_ok = false;
      rep.warnings.push_back("eta_i(x_j) nearly rank-deficient on sampled node tuples "
                             "(hadamard ratio " + std::to_string(rep.worst_hadamard) + ")");
    }
  }
  return rep;
}

}  // namespace evolim
