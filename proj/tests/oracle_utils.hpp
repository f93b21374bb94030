// Independent oracles used by the tests: quadrature, closed forms and brute
// force searches that never touch the implementation paths they check.
#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

#include "evolim/kernel.hpp"

namespace oracle {

// composite Simpson rule; n must be even
template <typename F>
double simpson(F&& f, double a, double b, int n) {
  if (n % 2 != 0) ++n;
  double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

// inverse error function by Newton on std::erf
inline double erfinv(double y) {
  double x = 0.5 * y;
  for (int it = 0; it < 80; ++it) {
    double r = std::erf(x) - y;
    double d = 2.0 / std::sqrt(M_PI) * std::exp(-x * x);
    x -= r / d;
  }
  return x;
}

// classic RK4 for a scalar ODE y' = f(t, y)
template <typename F>
double rk4(F&& f, double y0, double t0, double t1, int steps) {
  double y = y0, t = t0, h = (t1 - t0) / steps;
  for (int s = 0; s < steps; ++s) {
    double k1 = f(t, y);
    double k2 = f(t + 0.5 * h, y + 0.5 * h * k1);
    double k3 = f(t + 0.5 * h, y + 0.5 * h * k2);
    double k4 = f(t + h, y + h * k3);
    y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t += h;
  }
  return y;
}

// ---- brute-force entropy minimization over 1- and 2-atom configurations ----
// L(alpha at x) = alpha - sum_i log(1 + alpha eta_i(x)); convex in the
// weights, solved by bisection on the stationarity condition.

struct BruteResult {
  double entropy = 0.0;
  std::vector<double> locations;
  std::vector<double> weights;
  std::vector<double> I;
};

// minimize over alpha >= 0 for fixed locations; eta[i][l] = eta_i(x_l)
inline std::vector<double> solve_weights(const std::vector<std::vector<double>>& eta,
                                         int sweeps = 12) {
  std::size_t k = eta.size(), m = eta[0].size();
  std::vector<double> alpha(m, 0.1);
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    double moved = 0.0;
    for (std::size_t l = 0; l < m; ++l) {
      // dL/dalpha_l = 1 - sum_i eta_il / (1 + sum_j eta_ij alpha_j), monotone
      auto grad = [&](double a) {
        double g = 1.0;
        for (std::size_t i = 0; i < k; ++i) {
          double denom = 1.0;
          for (std::size_t j = 0; j < m; ++j)
            denom += eta[i][j] * (j == l ? a : alpha[j]);
          g -= eta[i][l] / denom;
        }
        return g;
      };
      double prev = alpha[l];
      if (grad(0.0) >= 0.0) {  // no mass wanted at this location
        alpha[l] = 0.0;
        moved += prev;
        continue;
      }
      double lo = 0.0, hi = 1.0;
      while (grad(hi) < 0.0 && hi < 1e12) hi *= 2.0;
      for (int it = 0; it < 70; ++it) {
        double mid = 0.5 * (lo + hi);
        (grad(mid) < 0.0 ? lo : hi) = mid;
      }
      alpha[l] = 0.5 * (lo + hi);
      moved += std::abs(alpha[l] - prev);
    }
    if (moved < 1e-13) break;
  }
  return alpha;
}

inline double entropy_at(const std::vector<std::vector<double>>& eta,
                         const std::vector<double>& alpha) {
  double L = 0.0;
  for (double a : alpha) L += a;
  for (const auto& row : eta) {
    double s = 0.0;
    for (std::size_t l = 0; l < alpha.size(); ++l) s += row[l] * alpha[l];
    L -= std::log1p(s);
  }
  return L;
}

// exhaustive search over all 1- and 2-atom placements on the candidate set
inline BruteResult brute_force_min_entropy(
    const std::vector<double>& candidates,
    const std::function<double(int, double)>& eta_eval, int k) {
  BruteResult best;
  best.entropy = 0.0;  // the empty measure is always admissible
  auto consider = [&](const std::vector<double>& locs) {
    std::vector<std::vector<double>> eta(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i)
      for (double x : locs) eta[static_cast<std::size_t>(i)].push_back(eta_eval(i, x));
    std::vector<double> alpha = solve_weights(eta);
    double L = entropy_at(eta, alpha);
    if (L < best.entropy) {
      best.entropy = L;
      best.locations = locs;
      best.weights = alpha;
      best.I.assign(static_cast<std::size_t>(k), 1.0);
      for (int i = 0; i < k; ++i) {
        double s = 0.0;
        for (std::size_t l = 0; l < locs.size(); ++l)
          s += eta[static_cast<std::size_t>(i)][l] * alpha[l];
        best.I[static_cast<std::size_t>(i)] = 1.0 / (1.0 + s);
      }
    }
  };
  for (std::size_t a = 0; a < candidates.size(); ++a) consider({candidates[a]});
  for (std::size_t a = 0; a < candidates.size(); ++a)
    for (std::size_t b = a + 1; b < candidates.size(); ++b)
      consider({candidates[a], candidates[b]});
  return best;
}

// random admissible mutation kernel: nonnegative, symmetric, zero endpoints
inline evolim::MutationKernel random_kernel(std::mt19937_64& rng, double rho = 1.0,
                                            int resolution = 65) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> samples(static_cast<std::size_t>(resolution));
  for (auto& v : samples) v = unif(rng) + 0.05;
  samples.front() = 0.0;
  samples.back() = 0.0;
  return evolim::MutationKernel::from_samples(rho, std::move(samples));
}

}  // namespace oracle
