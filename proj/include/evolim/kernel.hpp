#pragma once

#include <span>
#include <string>
#include <vector>

#include "evolim/errors.hpp"

namespace evolim {

// Compactly supported mutation kernel, tabulated at uniformly spaced nodes on
// [-support_radius, support_radius] with trapezoid quadrature weights.
//
// Construction symmetrizes the density (zero first moment) and normalizes it
// to unit mass; both moments then hold to ~1e-15. The density must be
// nonnegative and vanish at the support endpoints.
class MutationKernel {
 public:
  // raised-cosine bump, C^1 at the endpoints
  static MutationKernel cos2(double support_radius, int resolution = 129);
  // hat function (1 - |z|/rho)/rho
  static MutationKernel triangle(double support_radius, int resolution = 129);
  // polynomial bump (1 - (z/rho)^2)^2, normalized
  static MutationKernel poly2(double support_radius, int resolution = 129);
  // user samples on the uniform node set (size must equal resolution)
  static MutationKernel from_samples(double support_radius, std::vector<double> samples);
  // K == 0: mutation switched off. Violates the unit-mass invariant on
  // purpose; only for tests and degenerate configurations.
  static MutationKernel zero(double support_radius, int resolution = 129);

  static MutationKernel from_family(const std::string& family, double support_radius,
                                    int resolution);

  double support_radius() const { return rho_; }
  int resolution() const { return static_cast<int>(density_.size()); }
  bool is_zero() const { return zero_; }

  std::span<const double> nodes() const { return nodes_; }
  std::span<const double> density() const { return density_; }
  std::span<const double> weights() const { return weights_; }

  double mass() const;          // integral of K (1 after normalization)
  double first_moment() const;  // integral of z K(z)
  double second_moment() const;

 private:
  MutationKernel(double rho, std::vector<double> samples, bool normalize);
  double rho_ = 1.0;
  bool zero_ = false;
  std::vector<double> nodes_, density_, weights_;
};

// H(p) = integral of K(z) (e^{p z} - 1) dz by the kernel's quadrature.
// Throws RangeError when |p| * support_radius exceeds the guard.
double hamiltonian_H(const MutationKernel& kernel, double p, double guard = kOverflowGuard);

// H'(p) by the same quadrature (used for CFL and Lax-Friedrichs bounds).
double hamiltonian_H_prime(const MutationKernel& kernel, double p, double guard = kOverflowGuard);

// max of |H'| over [-p_abs, p_abs]; H' is nondecreasing so the max sits at an
// endpoint.
double max_abs_H_prime(const MutationKernel& kernel, double p_abs, double guard = kOverflowGuard);

}  // namespace evolim
