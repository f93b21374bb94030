#include "evolim/metastable.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "evolim/errors.hpp"

namespace evolim::metastable {

FeasibleSet FeasibleSet::from_interval(const TraitGrid& grid, double a, double b) {
  FeasibleSet w;
  for (int j = 0; j < grid.n; ++j) {
    double x = grid.node(j);
    if (x >= a && x <= b) w.indices.push_back(j);
  }
  return w;
}

FeasibleSet FeasibleSet::from_mask(std::span<const bool> mask) {
  FeasibleSet w;
  for (std::size_t j = 0; j < mask.size(); ++j)
    if (mask[j]) w.indices.push_back(static_cast<int>(j));
  return w;
}

FeasibleSet FeasibleSet::whole(const TraitGrid& grid) {
  FeasibleSet w;
  w.indices.resize(static_cast<std::size_t>(grid.n));
  for (int j = 0; j < grid.n; ++j) w.indices[static_cast<std::size_t>(j)] = j;
  return w;
}

bool FeasibleSet::contains_near(const TraitGrid& grid, double x, double tol) const {
  for (int j : indices)
    if (std::abs(grid.node(j) - x) <= tol) return true;
  return false;
}

ResourceVector bar_resources(const DiscreteMeasure& mu, const ResourceModel& model) {
  ResourceVector I(std::vector<double>(static_cast<std::size_t>(model.k())));
  for (int i = 0; i < model.k(); ++i) {
    double s = 0.0;
    for (const auto& a : mu.atoms) s += a.weight * model.eta(i, a.x);
    I[i] = 1.0 / (1.0 + s);
  }
  return I;
}

double entropy(const DiscreteMeasure& mu, const ResourceModel& model) {
  double L = mu.total_weight();
  for (int i = 0; i < model.k(); ++i) {
    double s = 0.0;
    for (const auto& a : mu.atoms) s += a.weight * model.eta(i, a.x);
    L -= std::log1p(s);
  }
  return L;
}

namespace {
// eta_i at the omega nodes, evaluated once per solve
struct OmegaTable {
  int k = 0;
  int m = 0;
  std::vector<double> eta;  // k x m
  OmegaTable(const FeasibleSet& omega, const TraitGrid& grid, const ResourceModel& model)
      : k(model.k()), m(omega.size()), eta(static_cast<std::size_t>(model.k()) * omega.size()) {
    for (int l = 0; l < m; ++l) {
      double x = grid.node(omega.indices[static_cast<std::size_t>(l)]);
      for (int i = 0; i < k; ++i) eta[static_cast<std::size_t>(i) * m + l] = model.eta(i, x);
    }
  }
  double at(int i, int l) const { return eta[static_cast<std::size_t>(i) * m + l]; }
  double sup_eta_sum() const {
    double s = 0.0;
    for (int l = 0; l < m; ++l) {
      double e = 0.0;
      for (int i = 0; i < k; ++i) e += at(i, l);
      s = std::max(s, e);
    }
    return s;
  }
};

// integrals A_i = sum_l eta_i(x_l) w_l over omega
void eta_integrals(std::span<const double> w, const OmegaTable& table, std::vector<double>& A) {
  A.assign(static_cast<std::size_t>(table.k), 0.0);
  for (int i = 0; i < table.k; ++i) {
    double s = 0.0;
    for (int l = 0; l < table.m; ++l) s += table.at(i, l) * w[static_cast<std::size_t>(l)];
    A[static_cast<std::size_t>(i)] = s;
  }
}

double entropy_from_integrals(std::span<const double> w, std::span<const double> A) {
  double L = 0.0;
  for (double v : w) L += v;
  for (double a : A) L -= std::log1p(a);
  return L;
}

void growth_from_integrals(const OmegaTable& table, std::span<const double> A,
                           std::vector<double>& g) {
  g.assign(static_cast<std::size_t>(table.m), -1.0);
  for (int i = 0; i < table.k; ++i) {
    double inv = 1.0 / (1.0 + A[static_cast<std::size_t>(i)]);
    for (int l = 0; l < table.m; ++l) g[static_cast<std::size_t>(l)] += table.at(i, l) * inv;
  }
}

// L is nonincreasing along the flow and L(w) >= M - k log1p(M S), so iterate
// masses stay below the root of M - k log1p(M S) = L0.
double derive_mass_cap(double L0, int k, double sup_eta) {
  double S = std::max(sup_eta, 1e-12);
  auto f = [&](double M) { return M - k * std::log1p(M * S) - L0; };
  double hi = 1.0;
  while (f(hi) < 0.0 && hi < 1e18) hi *= 2.0;
  double lo = 0.0;
  for (int it = 0; it < 200 && hi - lo > 1e-9 * (1.0 + hi); ++it) {
    double mid = 0.5 * (lo + hi);
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  return std::max(hi, 1.0) * 2.0;
}

// ---- active-set vertex polish ------------------------------------------------
// Near the optimum the iterate carries clusters of adjacent populated nodes;
// intra-cluster redistribution is an almost-flat direction of L and mirror
// descent crawls along it. The exact discrete minimizer generically puts one
// node per cluster, so we try those vertices directly: solve the stationarity
// system g_l(alpha) = 0 on a candidate support by damped Newton (the Jacobian
// -sum_i I_i^2 eta_il eta_im is negative semidefinite; a small ridge keeps it
// solvable in degenerate cases) and accept if the full first-variation
// conditions hold.

bool small_solve(std::vector<double> a, std::vector<double> b, std::vector<double>& x) {
  const int m = static_cast<int>(b.size());
  x.assign(static_cast<std::size_t>(m), 0.0);
  for (int c = 0; c < m; ++c) {
    int piv = c;
    for (int r = c + 1; r < m; ++r)
      if (std::abs(a[static_cast<std::size_t>(r) * m + c]) >
          std::abs(a[static_cast<std::size_t>(piv) * m + c]))
        piv = r;
    if (std::abs(a[static_cast<std::size_t>(piv) * m + c]) < 1e-300) return false;
    if (piv != c) {
      for (int cc = 0; cc < m; ++cc)
        std::swap(a[static_cast<std::size_t>(piv) * m + cc],
                  a[static_cast<std::size_t>(c) * m + cc]);
      std::swap(b[static_cast<std::size_t>(piv)], b[static_cast<std::size_t>(c)]);
    }
    for (int r = c + 1; r < m; ++r) {
      double f = a[static_cast<std::size_t>(r) * m + c] / a[static_cast<std::size_t>(c) * m + c];
      for (int cc = c; cc < m; ++cc)
        a[static_cast<std::size_t>(r) * m + cc] -= f * a[static_cast<std::size_t>(c) * m + cc];
      b[static_cast<std::size_t>(r)] -= f * b[static_cast<std::size_t>(c)];
    }
  }
  for (int r = m - 1; r >= 0; --r) {
    double s = b[static_cast<std::size_t>(r)];
    for (int cc = r + 1; cc < m; ++cc)
      s -= a[static_cast<std::size_t>(r) * m + cc] * x[static_cast<std::size_t>(cc)];
    x[static_cast<std::size_t>(r)] = s / a[static_cast<std::size_t>(r) * m + r];
  }
  return true;
}

// Newton for g = 0 on a fixed support; returns positive weights or empty.
std::vector<double> solve_vertex_weights(const OmegaTable& table,
                                         const std::vector<int>& support,
                                         std::vector<double> alpha, double gtol) {
  const int m = static_cast<int>(support.size());
  const int k = table.k;
  std::vector<double> g(static_cast<std::size_t>(m)), I(static_cast<std::size_t>(k));
  std::vector<double> jac(static_cast<std::size_t>(m) * m), d;
  for (double& a : alpha) a = std::max(a, 1e-12);
  for (int iter = 0; iter < 80; ++iter) {
    for (int i = 0; i < k; ++i) {
      double A = 0.0;
      for (int l = 0; l < m; ++l)
        A += table.at(i, support[static_cast<std::size_t>(l)]) * alpha[static_cast<std::size_t>(l)];
      I[static_cast<std::size_t>(i)] = 1.0 / (1.0 + A);
    }
    double gmax = 0.0;
    for (int l = 0; l < m; ++l) {
      double s = -1.0;
      for (int i = 0; i < k; ++i)
        s += I[static_cast<std::size_t>(i)] * table.at(i, support[static_cast<std::size_t>(l)]);
      g[static_cast<std::size_t>(l)] = s;
      gmax = std::max(gmax, std::abs(s));
    }
    if (gmax <= gtol) return alpha;
    double ridge = 0.0;
    for (int l = 0; l < m; ++l) {
      for (int c = 0; c < m; ++c) {
        double v = 0.0;
        for (int i = 0; i < k; ++i)
          v -= I[static_cast<std::size_t>(i)] * I[static_cast<std::size_t>(i)] *
               table.at(i, support[static_cast<std::size_t>(l)]) *
               table.at(i, support[static_cast<std::size_t>(c)]);
        jac[static_cast<std::size_t>(l) * m + c] = v;
        if (l == c) ridge = std::max(ridge, std::abs(v));
      }
    }
    for (int l = 0; l < m; ++l)
      jac[static_cast<std::size_t>(l) * m + l] -= 1e-12 * ridge + 1e-300;
    std::vector<double> rhs(g.begin(), g.end());
    for (double& v : rhs) v = -v;
    if (!small_solve(jac, rhs, d)) return {};
    // damped update keeping the weights positive
    double damp = 1.0;
    for (int l = 0; l < m; ++l) {
      double target = alpha[static_cast<std::size_t>(l)] + d[static_cast<std::size_t>(l)];
      if (target <= 0.0)
        damp = std::min(damp, 0.9 * alpha[static_cast<std::size_t>(l)] /
                                  -d[static_cast<std::size_t>(l)]);
    }
    for (int l = 0; l < m; ++l) alpha[static_cast<std::size_t>(l)] += damp * d[static_cast<std::size_t>(l)];
  }
  return {};
}

struct PolishOutcome {
  bool ok = false;
  std::vector<double> weights;  // aligned with omega
  double entropy = 0.0;
};

PolishOutcome try_vertex_polish(const OmegaTable& table, std::span<const double> w,
                                double cert_tol, double prune_tol, double L_current) {
  PolishOutcome out;
  const int m = table.m;
  double wmax = 0.0;
  for (double v : w) wmax = std::max(wmax, v);
  if (!(wmax > 0.0)) return out;
  const double act = std::max(prune_tol, 1e-8 * wmax);

  // clusters of populated nodes (gap of more than 2 local indices splits)
  struct Cluster {
    std::vector<int> members;
  };
  std::vector<Cluster> clusters;
  for (int l = 0; l < m; ++l) {
    if (!(w[static_cast<std::size_t>(l)] > act)) continue;
    if (clusters.empty() || l - clusters.back().members.back() > 2)
      clusters.push_back({});
    clusters.back().members.push_back(l);
  }
  if (clusters.empty() || clusters.size() > 6) return out;

  // candidate nodes per cluster: the two heaviest members
  std::vector<std::vector<int>> cands(clusters.size());
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    std::vector<int> members = clusters[c].members;
    std::sort(members.begin(), members.end(), [&](int a, int b) {
      return w[static_cast<std::size_t>(a)] > w[static_cast<std::size_t>(b)];
    });
    cands[c].push_back(members[0]);
    if (members.size() > 1) cands[c].push_back(members[1]);
  }

  std::vector<double> A(static_cast<std::size_t>(table.k));
  std::vector<double> best_w;
  double best_L = L_current + 1e-12;
  std::vector<int> support(clusters.size());
  std::vector<std::size_t> pick(clusters.size(), 0);
  for (;;) {
    for (std::size_t c = 0; c < clusters.size(); ++c)
      support[c] = cands[c][pick[c]];
    std::vector<double> alpha0(clusters.size());
    for (std::size_t c = 0; c < clusters.size(); ++c) {
      double s = 0.0;
      for (int l : clusters[c].members) s += w[static_cast<std::size_t>(l)];
      alpha0[c] = s;
    }
    std::vector<double> alpha =
        solve_vertex_weights(table, support, std::move(alpha0), 0.01 * cert_tol);
    if (!alpha.empty()) {
      bool positive = true;
      for (double a : alpha) positive = positive && a > prune_tol;
      if (positive) {
        std::vector<double> wfull(static_cast<std::size_t>(m), 0.0);
        for (std::size_t c = 0; c < clusters.size(); ++c)
          wfull[static_cast<std::size_t>(support[c])] = alpha[c];
        eta_integrals(wfull, table, A);
        double L = entropy_from_integrals(wfull, A);
        double viol = -std::numeric_limits<double>::infinity();
        std::vector<double> gfull;
        growth_from_integrals(table, A, gfull);
        for (double v : gfull) viol = std::max(viol, v);
        if (viol <= cert_tol && L < best_L) {
          best_L = L;
          best_w = std::move(wfull);
        }
      }
    }
    // next combination
    std::size_t c = 0;
    for (; c < clusters.size(); ++c) {
      if (++pick[c] < cands[c].size()) break;
      pick[c] = 0;
    }
    if (c == clusters.size()) break;
  }
  if (!best_w.empty()) {
    out.ok = true;
    out.weights = std::move(best_w);
    out.entropy = best_L;
  }
  return out;
}

std::vector<double> initial_weights(const FeasibleSet& omega, const SolveOptions& opts) {
  std::vector<double> w(static_cast<std::size_t>(omega.size()),
                        opts.init_mass / std::max(1, omega.size()));
  if (opts.random_init) {
    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> unif(0.5, 1.5);
    for (double& v : w) v *= unif(rng);
  }
  return w;
}

bool atoms_degenerate(const DiscreteMeasure& mu, const ResourceModel& model) {
  int dim = std::min<int>(model.k(), static_cast<int>(mu.atoms.size()));
  if (dim < 2) return false;
  // Hadamard ratio of the leading dim x dim block of eta_i(x_l)
  std::vector<double> m(static_cast<std::size_t>(dim) * dim);
  for (int r = 0; r < dim; ++r)
    for (int c = 0; c < dim; ++c)
      m[static_cast<std::size_t>(r) * dim + c] = model.eta(r, mu.atoms[static_cast<std::size_t>(c)].x);
  double rows = 1.0, det = 1.0;
  for (int r = 0; r < dim; ++r) {
    double s = 0.0;
    for (int c = 0; c < dim; ++c) s += m[static_cast<std::size_t>(r) * dim + c] *
                                       m[static_cast<std::size_t>(r) * dim + c];
    rows *= std::sqrt(s);
  }
  for (int c = 0; c < dim; ++c) {
    int piv = c;
    for (int r = c + 1; r < dim; ++r)
      if (std::abs(m[static_cast<std::size_t>(r) * dim + c]) >
          std::abs(m[static_cast<std::size_t>(piv) * dim + c]))
        piv = r;
    if (piv != c)
      for (int cc = 0; cc < dim; ++cc)
        std::swap(m[static_cast<std::size_t>(piv) * dim + cc],
                  m[static_cast<std::size_t>(c) * dim + cc]);
    double d = m[static_cast<std::size_t>(c) * dim + c];
    if (d == 0.0) return true;
    det *= d;
    for (int r = c + 1; r < dim; ++r) {
      double f = m[static_cast<std::size_t>(r) * dim + c] / d;
      for (int cc = c; cc < dim; ++cc)
        m[static_cast<std::size_t>(r) * dim + cc] -= f * m[static_cast<std::size_t>(c) * dim + cc];
    }
  }
  return !(rows > 0.0) || std::abs(det) / rows < 1e-10;
}
}  // namespace

double entropy(std::span<const double> weights, const FeasibleSet& omega,
               const TraitGrid& grid, const ResourceModel& model) {
  if (static_cast<int>(weights.size()) != omega.size())
    throw InvalidInputError("entropy: weights not aligned with omega");
  for (double v : weights)
    if (!std::isfinite(v) || v < 0.0)
      throw InvalidInputError("entropy: weights must be finite and nonnegative");
  OmegaTable table(omega, grid, model);
  std::vector<double> A;
  eta_integrals(weights, table, A);
  return entropy_from_integrals(weights, A);
}

std::vector<double> growth_on_omega(std::span<const double> weights, const FeasibleSet& omega,
                                    const TraitGrid& grid, const ResourceModel& model) {
  OmegaTable table(omega, grid, model);
  std::vector<double> A, g;
  eta_integrals(weights, table, A);
  growth_from_integrals(table, A, g);
  return g;
}

std::vector<double> replicator_step(std::span<const double> weights, const FeasibleSet& omega,
                                    const TraitGrid& grid, const ResourceModel& model,
                                    double dt) {
  if (!(dt > 0.0)) throw InvalidInputError("replicator_step: need dt > 0");
  std::vector<double> g = growth_on_omega(weights, omega, grid, model);
  std::vector<double> out(weights.begin(), weights.end());
  for (std::size_t l = 0; l < out.size(); ++l) out[l] *= std::exp(dt * g[l]);
  return out;
}

ReplicatorResult replicator_solve(const FeasibleSet& omega, const TraitGrid& grid,
                                  const ResourceModel& model, const SolveOptions& opts) {
  ReplicatorResult res;
  if (omega.empty()) {
    res.converged = true;
    return res;
  }
  OmegaTable table(omega, grid, model);
  res.weights = initial_weights(omega, opts);
  std::vector<double> A, g;
  eta_integrals(res.weights, table, A);
  double L = entropy_from_integrals(res.weights, A);
  const double cap = opts.mass_cap > 0.0 ? opts.mass_cap
                                         : derive_mass_cap(L, model.k(), table.sup_eta_sum());
  for (res.steps = 0; res.steps < opts.max_iters; ++res.steps) {
    growth_from_integrals(table, A, g);
    double resid = 0.0;
    for (std::size_t l = 0; l < g.size(); ++l)
      if (res.weights[l] > opts.prune_tol) resid = std::max(resid, std::abs(g[l]));
    res.final_residual = resid;
    if (resid < opts.cert_tol) {
      res.converged = true;
      return res;
    }
    // adaptive dt from the populated nodes; decaying empty nodes cannot
    // overshoot and mass growth is kept in check by the entropy guard below
    double dt = 0.5 / std::max(resid, 1e-30);
    std::vector<double> wtry(res.weights.size());
    double Lnew = L;
    for (;;) {
      for (std::size_t l = 0; l < res.weights.size(); ++l)
        wtry[l] = res.weights[l] * std::exp(dt * g[l]);
      eta_integrals(wtry, table, A);
      Lnew = entropy_from_integrals(wtry, A);
      if (Lnew <= L + 1e-13 || dt <= 1e-12) break;
      dt *= 0.5;
    }
    res.weights.swap(wtry);
    res.max_entropy_increase = std::max(res.max_entropy_increase, Lnew - L);
    L = Lnew;
    double mass = 0.0;
    for (double v : res.weights) mass += v;
    if (mass > cap)
      throw NonConvergenceError("replicator_solve: iterate mass exceeded the coercivity cap",
                                EquilibriumCertificate{});
  }
  return res;
}

DiscreteMeasure weights_to_measure(std::span<const double> weights, const FeasibleSet& omega,
                                   const TraitGrid& grid, double prune_tol,
                                   double merge_radius) {
  DiscreteMeasure mu;
  for (std::size_t l = 0; l < weights.size(); ++l)
    if (weights[l] > prune_tol) mu.atoms.push_back(Atom{grid.node(omega.indices[l]), weights[l]});
  return merge_atoms(mu, merge_radius);
}

EquilibriumCertificate certify(const DiscreteMeasure& mu, const FeasibleSet& omega,
                               const TraitGrid& grid, const ResourceModel& model,
                               double cert_tol) {
  for (const auto& a : mu.atoms)
    if (!omega.contains_near(grid, a.x, grid.dx))
      throw InvalidInputError("certify: measure support leaves the feasible set");
  EquilibriumCertificate cert;
  cert.tol = cert_tol;
  cert.measure = mu;
  cert.resources = bar_resources(mu, model);
  cert.entropy_value = entropy(mu, model);
  double viol = omega.empty() ? 0.0 : -std::numeric_limits<double>::infinity();
  for (int j : omega.indices)
    viol = std::max(viol, model.growth(cert.resources, grid.node(j)));
  cert.max_violation_on_omega = viol;
  double resid = 0.0;
  for (const auto& a : mu.atoms)
    resid = std::max(resid, std::abs(model.growth(cert.resources, a.x)));
  cert.max_residual_on_support = resid;
  cert.degenerate = atoms_degenerate(mu, model);
  return cert;
}

EquilibriumCertificate minimize_entropy(const FeasibleSet& omega, const TraitGrid& grid,
                                        const ResourceModel& model, const SolveOptions& opts) {
  if (omega.empty()) {
    EquilibriumCertificate cert;
    cert.tol = opts.cert_tol;
    cert.resources = ResourceVector::ones(model.k());
    return cert;
  }

  OmegaTable table(omega, grid, model);
  std::vector<double> w = initial_weights(omega, opts);
  std::vector<double> A, g, wtry(w.size());
  eta_integrals(w, table, A);
  double L = entropy_from_integrals(w, A);
  const double cap = opts.mass_cap > 0.0 ? opts.mass_cap
                                         : derive_mass_cap(L, model.k(), table.sup_eta_sum());

  auto make_cert = [&]() {
    DiscreteMeasure mu = weights_to_measure(w, omega, grid, opts.prune_tol,
                                            opts.merge_radius_factor * grid.dx);
    return certify(mu, omega, grid, model, opts.cert_tol);
  };

  double step = 1.0;
  const double step_min = 1e-16, step_max = 1e12;
  for (int it = 0; it < opts.max_iters; ++it) {
    growth_from_integrals(table, A, g);

    // first-variation stopping rule: growth <= tol on all of omega and
    // |growth| <= tol wherever mass remains
    double viol = -std::numeric_limits<double>::infinity();
    double resid = 0.0, decay = 0.0;
    int populated = 0;
    for (std::size_t l = 0; l < g.size(); ++l) {
      viol = std::max(viol, g[l]);
      if (w[l] > opts.prune_tol) {
        resid = std::max(resid, std::abs(g[l]));
        ++populated;
      }
      decay += w[l] * g[l] * g[l];
    }
    if (viol <= opts.cert_tol && resid <= opts.cert_tol) return make_cert();

    // once the support has settled into a few clusters, jump to the vertex
    // the flat intra-cluster direction is crawling toward
    if (populated > 0 && populated <= 64 && (resid <= 0.05 || it % 200 == 199)) {
      PolishOutcome polish =
          try_vertex_polish(table, w, opts.cert_tol, opts.prune_tol, L);
      if (polish.ok) {
        w = std::move(polish.weights);
        return make_cert();
      }
    }

    // mirror-descent step w <- w exp(step g), backtracked on L
    bool accepted = false;
    while (!accepted) {
      for (std::size_t l = 0; l < w.size(); ++l) {
        double e = step * g[l];
        e = std::clamp(e, -opts.overflow_guard, opts.overflow_guard);
        wtry[l] = w[l] * std::exp(e);
      }
      eta_integrals(wtry, table, A);
      double Ltry = entropy_from_integrals(wtry, A);
      if (Ltry <= L - 1e-4 * std::min(step, 1.0) * decay || step <= step_min) {
        w.swap(wtry);
        L = Ltry;
        accepted = true;
        step = std::min(step * 2.0, step_max);
      } else {
        step *= 0.5;
        if (step < step_min) step = step_min;
      }
    }
    double mass = 0.0;
    for (double v : w) mass += v;
    if (mass > cap)
      throw NonConvergenceError("minimize_entropy: iterate mass exceeded the coercivity cap",
                                make_cert());
  }
  throw NonConvergenceError("minimize_entropy: first-variation tolerance not reached after " +
                                std::to_string(opts.max_iters) + " iterations",
                            make_cert());
}

}  // namespace evolim::metastable
