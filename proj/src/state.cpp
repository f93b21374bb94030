#include "evolim/state.hpp"

#include <algorithm>
#include <cmath>

#include "evolim/numerics.hpp"

namespace evolim {

LogDensityState::LogDensityState(TraitGrid g, std::vector<double> phi_, double eps_, double t_)
    : grid(g), phi(std::move(phi_)), eps(eps_), t(t_) {
  if (static_cast<int>(phi.size()) != grid.n)
    throw InvalidInputError("LogDensityState: field length != grid size");
  if (!(eps >= 0.0) || !std::isfinite(eps))
    throw InvalidInputError("LogDensityState: eps must be >= 0");
  validate();
}

void LogDensityState::validate() const {
  if (!all_finite(phi)) throw InvalidInputError("LogDensityState: phi must be finite");
}

double LogDensityState::sup_phi() const {
  return *std::max_element(phi.begin(), phi.end());
}

double interp_phi(const LogDensityState& state, double x) {
  const auto& g = state.grid;
  const auto& phi = state.phi;
  const std::size_t n = phi.size();
  if (x <= g.x_min) {
    double slope = (phi[1] - phi[0]) / g.dx;
    return phi[0] + slope * (x - g.x_min);
  }
  if (x >= g.x_max) {
    double slope = (phi[n - 1] - phi[n - 2]) / g.dx;
    return phi[n - 1] + slope * (x - g.x_max);
  }
  double s = (x - g.x_min) / g.dx;
  std::size_t j = static_cast<std::size_t>(s);
  if (j >= n - 1) j = n - 2;
  double th = s - static_cast<double>(j);
  return phi[j] * (1.0 - th) + phi[j + 1] * th;
}

double hamiltonian_H_eps(const LogDensityState& state, const MutationKernel& kernel, int j,
                         double guard) {
  if (!(state.eps > 0.0)) throw InvalidInputError("hamiltonian_H_eps: need eps > 0");
  if (j < 0 || j >= state.grid.n) throw InvalidInputError("hamiltonian_H_eps: node out of range");
  if (kernel.is_zero()) return 0.0;
  const double xj = state.grid.node(j);
  const double pj = state.phi[static_cast<std::size_t>(j)];
  auto z = kernel.nodes();
  auto k = kernel.density();
  auto w = kernel.weights();
  double s = 0.0;
  for (std::size_t q = 0; q < k.size(); ++q) {
    double e = (interp_phi(state, xj + state.eps * z[q]) - pj) / state.eps;
    if (std::abs(e) > guard)
      throw RangeError("hamiltonian_H_eps: exponent exceeds overflow guard");
    s += w[q] * k[q] * std::expm1(e);
  }
  return s;
}

HepsEvaluator::HepsEvaluator(const TraitGrid& grid, const MutationKernel& kernel, double eps)
    : grid_(grid), kernel_(kernel), eps_(eps) {
  if (!(eps > 0.0)) throw InvalidInputError("HepsEvaluator: need eps > 0");
  auto z = kernel_.nodes();
  shift_.resize(z.size());
  frac_.resize(z.size());
  for (std::size_t q = 0; q < z.size(); ++q) {
    double off = eps_ * z[q] / grid_.dx;
    double fl = std::floor(off);
    shift_[q] = static_cast<int>(fl);
    frac_[q] = off - fl;
  }
}

void HepsEvaluator::eval(std::span<const double> phi, std::span<double> out,
                         double guard) const {
  const int n = grid_.n;
  if (static_cast<int>(phi.size()) != n || static_cast<int>(out.size()) != n)
    throw InvalidInputError("HepsEvaluator: size mismatch");
  if (kernel_.is_zero()) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  auto k = kernel_.density();
  auto w = kernel_.weights();
  const double slope_l = (phi[1] - phi[0]) / grid_.dx;
  const double slope_r = (phi[static_cast<std::size_t>(n) - 1] -
                          phi[static_cast<std::size_t>(n) - 2]) / grid_.dx;
  for (int j = 0; j < n; ++j) {
    const double pj = phi[static_cast<std::size_t>(j)];
    double s = 0.0;
    for (std::size_t q = 0; q < k.size(); ++q) {
      if (k[q] == 0.0) continue;
      int base = j + shift_[q];
      double val;
      if (base < 0) {
        // off the left end: extrapolate with the boundary slope
        double x_rel = (base + frac_[q]) * grid_.dx;  // offset from x_min
        val = phi[0] + slope_l * x_rel;
      } else if (base >= n - 1) {
        double x_rel = (base + frac_[q] - (n - 1)) * grid_.dx;
        val = (base == n - 1 && frac_[q] == 0.0)
                  ? phi[static_cast<std::size_t>(n) - 1]
                  : phi[static_cast<std::size_t>(n) - 1] + slope_r * x_rel;
      } else {
        val = phi[static_cast<std::size_t>(base)] * (1.0 - frac_[q]) +
              phi[static_cast<std::size_t>(base) + 1] * frac_[q];
      }
      double e = (val - pj) / eps_;
      if (std::abs(e) > guard)
        throw RangeError("H_eps: exponent exceeds overflow guard");
      s += w[q] * k[q] * std::expm1(e);
    }
    out[static_cast<std::size_t>(j)] = s;
  }
}

double log_mass(const LogDensityState& state) {
  if (!(state.eps > 0.0)) throw InvalidInputError("log_mass: need eps > 0");
  const auto& g = state.grid;
  return log_sum_exp(state.phi.size(), [&](std::size_t j) {
    return std::log(g.weight(static_cast<int>(j))) + state.phi[j] / state.eps;
  });
}

ResourceVector resources_from_log_density(const LogDensityState& state,
                                          const ResourceTable& table, double guard) {
  if (!(state.eps > 0.0))
    throw InvalidInputError("resources_from_log_density: need eps > 0");
  if (!(table.grid == state.grid))
    throw InvalidInputError("resources_from_log_density: grid mismatch");
  const auto& g = state.grid;
  for (double p : state.phi)
    if (p / state.eps > guard)
      throw RangeError("resources_from_log_density: phi/eps exceeds overflow guard");
  ResourceVector I(std::vector<double>(static_cast<std::size_t>(table.k)));
  for (int i = 0; i < table.k; ++i) {
    double S = log_sum_exp(state.phi.size(), [&](std::size_t j) {
      double le = table.log_at(i, static_cast<int>(j));
      if (le == kNegInf) return kNegInf;
      return std::log(g.weight(static_cast<int>(j))) + le + state.phi[j] / state.eps;
    });
    // 1/(1+e^S) without overflow on either side
    I[i] = S > 0.0 ? std::exp(-S) / (std::exp(-S) + 1.0) : 1.0 / (1.0 + std::exp(S));
  }
  return I;
}

double lipschitz_seminorm(std::span<const double> phi, double dx) {
  double m = 0.0;
  for (std::size_t j = 0; j + 1 < phi.size(); ++j)
    m = std::max(m, std::abs(phi[j + 1] - phi[j]) / dx);
  return m;
}

double min_second_difference(std::span<const double> phi, double dx) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t j = 1; j + 1 < phi.size(); ++j)
    m = std::min(m, (phi[j + 1] - 2.0 * phi[j] + phi[j - 1]) / (dx * dx));
  return m;
}

}  // namespace evolim
