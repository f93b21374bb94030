#include "evolim/kernel.hpp"

#include <algorithm>
#include <cmath>

namespace evolim {

namespace {
constexpr double kPi = 3.14159265358979323846;

std::vector<double> uniform_nodes(double rho, int resolution) {
  std::vector<double> z(static_cast<std::size_t>(resolution));
  double dz = 2.0 * rho / (resolution - 1);
  for (int q = 0; q < resolution; ++q) z[static_cast<std::size_t>(q)] = -rho + q * dz;
  // pin the endpoints exactly
  z.front() = -rho;
  z.back() = rho;
  return z;
}

void check_resolution(int resolution) {
  if (resolution < 65 || resolution % 2 == 0)
    throw InvalidInputError("MutationKernel: resolution must be odd and >= 65");
}
}  // namespace

MutationKernel::MutationKernel(double rho, std::vector<double> samples, bool normalize)
    : rho_(rho), density_(std::move(samples)) {
  if (!(rho > 0.0) || !std::isfinite(rho))
    throw InvalidInputError("MutationKernel: support radius must be positive");
  check_resolution(static_cast<int>(density_.size()));
  const int m = static_cast<int>(density_.size());
  nodes_ = uniform_nodes(rho, m);
  double dz = 2.0 * rho / (m - 1);
  weights_.assign(density_.size(), dz);
  weights_.front() = 0.5 * dz;
  weights_.back() = 0.5 * dz;

  double maxd = 0.0;
  for (double v : density_) {
    if (!std::isfinite(v)) throw InvalidInputError("MutationKernel: non-finite sample");
    maxd = std::max(maxd, std::abs(v));
  }
  if (!normalize) {  // the zero kernel
    zero_ = true;
    if (maxd != 0.0) throw InvalidInputError("MutationKernel: zero kernel must be zero");
    return;
  }
  if (std::abs(density_.front()) > 1e-12 * std::max(maxd, 1.0) ||
      std::abs(density_.back()) > 1e-12 * std::max(maxd, 1.0))
    throw InvalidInputError("MutationKernel: density must vanish at +-support_radius");
  density_.front() = 0.0;
  density_.back() = 0.0;

  // symmetrize: kills the first moment exactly (pairwise cancellation)
  for (int q = 0, r = m - 1; q < r; ++q, --r) {
    double avg = 0.5 * (density_[static_cast<std::size_t>(q)] +
                        density_[static_cast<std::size_t>(r)]);
    density_[static_cast<std::size_t>(q)] = avg;
    density_[static_cast<std::size_t>(r)] = avg;
  }
  for (double v : density_)
    if (v < 0.0) throw InvalidInputError("MutationKernel: density must be nonnegative");

  double total = 0.0;
  for (std::size_t q = 0; q < density_.size(); ++q) total += weights_[q] * density_[q];
  if (!(total > 0.0)) throw InvalidInputError("MutationKernel: density has zero mass");
  for (double& v : density_) v /= total;
}

MutationKernel MutationKernel::cos2(double rho, int resolution) {
  check_resolution(resolution);
  auto z = uniform_nodes(rho, resolution);
  std::vector<double> k(z.size());
  for (std::size_t q = 0; q < z.size(); ++q) {
    double c = std::cos(0.5 * kPi * z[q] / rho);
    k[q] = c * c;
  }
  k.front() = 0.0;
  k.back() = 0.0;
  return MutationKernel(rho, std::move(k), true);
}

MutationKernel MutationKernel::triangle(double rho, int resolution) {
  check_resolution(resolution);
  auto z = uniform_nodes(rho, resolution);
  std::vector<double> k(z.size());
  for (std::size_t q = 0; q < z.size(); ++q) k[q] = std::max(0.0, 1.0 - std::abs(z[q]) / rho);
  return MutationKernel(rho, std::move(k), true);
}

MutationKernel MutationKernel::poly2(double rho, int resolution) {
  check_resolution(resolution);
  auto z = uniform_nodes(rho, resolution);
  std::vector<double> k(z.size());
  for (std::size_t q = 0; q < z.size(); ++q) {
    double s = z[q] / rho;
    double b = 1.0 - s * s;
    k[q] = b * b;
  }
  k.front() = 0.0;
  k.back() = 0.0;
  return MutationKernel(rho, std::move(k), true);
}

MutationKernel MutationKernel::from_samples(double rho, std::vector<double> samples) {
  return MutationKernel(rho, std::move(samples), true);
}

MutationKernel MutationKernel::zero(double rho, int resolution) {
  check_resolution(resolution);
  return MutationKernel(rho, std::vector<double>(static_cast<std::size_t>(resolution), 0.0),
                        false);
}

MutationKernel MutationKernel::from_family(const std::string& family, double rho,
                                           int resolution) {
  if (family == "cos2") return cos2(rho, resolution);
  if (family == "triangle") return triangle(rho, resolution);
  if (family == "poly2") return poly2(rho, resolution);
  throw ConfigError("unknown kernel family: " + family);
}

double MutationKernel::mass() const {
  double s = 0.0;
  for (std::size_t q = 0; q < density_.size(); ++q) s += weights_[q] * density_[q];
  return s;
}

double MutationKernel::first_moment() const {
  double s = 0.0;
  for (std::size_t q = 0; q < density_.size(); ++q) s += weights_[q] * nodes_[q] * density_[q];
  return s;
}

double MutationKernel::second_moment() const {
  double s = 0.0;
  for (std::size_t q = 0; q < density_.size(); ++q)
    s += weights_[q] * nodes_[q] * nodes_[q] * density_[q];
  return s;
}

double hamiltonian_H(const MutationKernel& kernel, double p, double guard) {
  if (std::abs(p) * kernel.support_radius() > guard)
    throw RangeError("hamiltonian_H: |p| * support_radius exceeds overflow guard");
  auto z = kernel.nodes();
  auto k = kernel.density();
  auto w = kernel.weights();
  double s = 0.0;
  for (std::size_t q = 0; q < k.size(); ++q) s += w[q] * k[q] * std::expm1(p * z[q]);
  return s;
}

double hamiltonian_H_prime(const MutationKernel& kernel, double p, double guard) {
  if (std::abs(p) * kernel.support_radius() > guard)
    throw RangeError("hamiltonian_H_prime: |p| * support_radius exceeds overflow guard");
  auto z = kernel.nodes();
  auto k = kernel.density();
  auto w = kernel.weights();
  double s = 0.0;
  for (std::size_t q = 0; q < k.size(); ++q) s += w[q] * k[q] * z[q] * std::exp(p * z[q]);
  return s;
}

double max_abs_H_prime(const MutationKernel& kernel, double p_abs, double guard) {
  p_abs = std::abs(p_abs);
  return std::max(std::abs(hamiltonian_H_prime(kernel, -p_abs, guard)),
                  std::abs(hamiltonian_H_prime(kernel, p_abs, guard)));
}

}  // namespace evolim
