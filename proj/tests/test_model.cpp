#include <doctest.h>

#include <cmath>
#include <random>

#include "evolim/grid.hpp"
#include "evolim/kernel.hpp"
#include "evolim/numerics.hpp"
#include "evolim/resources.hpp"
#include "evolim/state.hpp"
#include "oracle_utils.hpp"

using namespace evolim;

TEST_CASE("grid nodes and weights") {
  TraitGrid g(-2.0, 2.0, 5);
  CHECK(g.dx == doctest::Approx(1.0));
  CHECK(g.node(0) == -2.0);
  CHECK(g.node(4) == 2.0);
  double total = 0.0;
  for (int j = 0; j < g.n; ++j) total += g.weight(j);
  CHECK(total == doctest::Approx(g.length()));
  CHECK_THROWS_AS(TraitGrid(0.0, 1.0, 2), InvalidInputError);
  CHECK_THROWS_AS(TraitGrid(1.0, 1.0, 5), InvalidInputError);
}

TEST_CASE("kernel construction invariants") {
  for (auto family : {"cos2", "triangle", "poly2"}) {
    MutationKernel k = MutationKernel::from_family(family, 1.5, 129);
    CHECK(std::abs(k.mass() - 1.0) < 1e-12);
    CHECK(std::abs(k.first_moment()) < 1e-12);
    CHECK(k.density().front() == 0.0);
    CHECK(k.density().back() == 0.0);
    for (double v : k.density()) CHECK(v >= 0.0);
  }
  // asymmetric samples are symmetrized at construction
  std::mt19937_64 rng(7);
  MutationKernel k = oracle::random_kernel(rng, 2.0, 65);
  CHECK(std::abs(k.mass() - 1.0) < 1e-12);
  CHECK(std::abs(k.first_moment()) < 1e-12);

  std::vector<double> bad(65, 1.0);  // nonzero endpoints
  CHECK_THROWS_AS(MutationKernel::from_samples(1.0, bad), InvalidInputError);
}

TEST_CASE("hamiltonian_H at p = 0 and symmetry") {
  MutationKernel k = MutationKernel::cos2(1.0, 129);
  CHECK(hamiltonian_H(k, 0.0) == 0.0);
  for (double p : {0.5, 1.0, 2.0})
    CHECK(std::abs(hamiltonian_H(k, p) - hamiltonian_H(k, -p)) < 1e-12);
  CHECK(hamiltonian_H(k, 3.0) >= -1.0);
  CHECK_THROWS_AS(hamiltonian_H(k, 600.0), RangeError);
}

TEST_CASE("hamiltonian_H against the quadrature oracle (cos^2 bump, p = 1)") {
  // oracle: fine Simpson quadrature of cos^2(pi z/2)(e^z - 1) on [-1, 1];
  // the closed form sinh(1)(1 - 1/(1+pi^2)) - 1 pins the oracle itself
  auto f = [](double z) {
    double c = std::cos(0.5 * M_PI * z);
    return c * c * (std::exp(z) - 1.0);
  };
  double ref = oracle::simpson(f, -1.0, 1.0, 200000);
  double closed = std::sinh(1.0) * (1.0 - 1.0 / (1.0 + M_PI * M_PI)) - 1.0;
  CHECK(std::abs(ref - closed) < 1e-13);
  CHECK(std::abs(closed - 0.067083073583606545) < 1e-15);

  MutationKernel k = MutationKernel::cos2(1.0, 513);
  CHECK(std::abs(hamiltonian_H(k, 1.0) - ref) < 1e-9);
}

TEST_CASE("H nonnegativity and midpoint convexity over random kernels") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> unif(-5.0, 5.0);
  for (int trial = 0; trial < 40; ++trial) {
    MutationKernel k = oracle::random_kernel(rng);
    for (int s = 0; s < 25; ++s) {
      double p = unif(rng), q = unif(rng);
      double hp = hamiltonian_H(k, p), hq = hamiltonian_H(k, q);
      CHECK(hp >= -1e-12);
      CHECK(hamiltonian_H(k, 0.5 * (p + q)) <= 0.5 * (hp + hq) + 1e-10);
    }
  }
}

TEST_CASE("hamiltonian_H_eps: constant and linear fields") {
  TraitGrid g(-2.0, 2.0, 401);
  MutationKernel k = MutationKernel::cos2(1.0, 129);

  LogDensityState cst(g, std::vector<double>(401, -3.0), 0.1);
  CHECK(hamiltonian_H_eps(cst, k, 200) == 0.0);

  for (double p : {-1.5, 0.7}) {
    std::vector<double> phi(401);
    for (int j = 0; j < g.n; ++j) phi[static_cast<std::size_t>(j)] = p * g.node(j);
    LogDensityState lin(g, phi, 0.05);
    double want = hamiltonian_H(k, p);
    for (int j : {0, 100, 200, 350, 400})
      CHECK(std::abs(hamiltonian_H_eps(lin, k, j) - want) < 1e-9);
  }
}

TEST_CASE("hamiltonian_H_eps against the direct quadrature oracle") {
  // phi = -sqrt(1+x^2), eps = 0.05, x = 0.5; oracle integrates the analytic
  // profile with Simpson at 10x the kernel resolution
  auto phi_fn = [](double x) { return -std::sqrt(1.0 + x * x); };
  const double eps = 0.05, x0 = 0.5;
  auto integrand = [&](double z) {
    double c = std::cos(0.5 * M_PI * z);
    return c * c * (std::exp((phi_fn(x0 + eps * z) - phi_fn(x0)) / eps) - 1.0);
  };
  double ref = oracle::simpson(integrand, -1.0, 1.0, 5130);
  CHECK(std::abs(ref - 0.01072609784506442) < 1e-10);  // frozen from the oracle

  TraitGrid g(-2.0, 2.0, 80001);
  std::vector<double> phi(static_cast<std::size_t>(g.n));
  for (int j = 0; j < g.n; ++j) phi[static_cast<std::size_t>(j)] = phi_fn(g.node(j));
  LogDensityState state(g, std::move(phi), eps);
  MutationKernel k = MutationKernel::cos2(1.0, 513);
  int j0 = g.nearest(x0);
  REQUIRE(g.node(j0) == doctest::Approx(x0).epsilon(1e-12));
  CHECK(std::abs(hamiltonian_H_eps(state, k, j0) - ref) < 1e-8);
}

TEST_CASE("H_eps evaluator matches the per-node op") {
  TraitGrid g(-3.0, 3.0, 301);
  MutationKernel k = MutationKernel::poly2(0.8, 65);
  std::vector<double> phi(static_cast<std::size_t>(g.n));
  for (int j = 0; j < g.n; ++j) {
    double x = g.node(j);
    phi[static_cast<std::size_t>(j)] = -0.5 * x * x + 0.3 * std::sin(2.0 * x);
  }
  LogDensityState state(g, phi, 0.07);
  HepsEvaluator eval(g, k, 0.07);
  std::vector<double> out(static_cast<std::size_t>(g.n));
  eval.eval(state.phi, out);
  for (int j : {0, 1, 77, 150, 299, 300})
    CHECK(out[static_cast<std::size_t>(j)] ==
          doctest::Approx(hamiltonian_H_eps(state, k, j)).epsilon(1e-12));
}

TEST_CASE("log_mass: constant field, kink oracle and scale invariance") {
  TraitGrid g(-10.0, 10.0, 80001);

  // constant phi == c: log(L) + c/eps
  {
    TraitGrid gs(-1.0, 3.0, 1001);
    LogDensityState s(gs, std::vector<double>(1001, -2.0), 0.5);
    CHECK(std::abs(log_mass(s) - (std::log(4.0) - 4.0)) < 1e-12);
  }

  // phi = -|x| on [-10,10], eps = 0.1: closed form 2 eps (1 - e^{-10/eps})
  {
    std::vector<double> phi(static_cast<std::size_t>(g.n));
    for (int j = 0; j < g.n; ++j) phi[static_cast<std::size_t>(j)] = -std::abs(g.node(j));
    LogDensityState s(g, phi, 0.1);
    double want = std::log(2.0 * 0.1 * (1.0 - std::exp(-100.0)));
    CHECK(std::abs(log_mass(s) - want) < 1e-6);

    // doubling eps with phi' = 2 phi leaves log_mass unchanged
    std::vector<double> phi2 = s.phi;
    for (double& v : phi2) v *= 2.0;
    LogDensityState s2(g, phi2, 0.2);
    CHECK(log_mass(s2) == log_mass(s));
  }
}

TEST_CASE("resource_response: trivial and oracle examples") {
  TraitGrid g(-8.0, 8.0, 1601);
  ResourceModel model({GrowthFunction::gaussian(2.0, 0.0, 1.0)});

  // u == 0 -> I = 1
  std::vector<double> u(static_cast<std::size_t>(g.n), 0.0);
  CHECK(resource_response(u, model, g)[0] == 1.0);

  // u scaled so that the eta integral is 1 -> I = 1/2
  for (int j = 0; j < g.n; ++j) {
    double x = g.node(j);
    u[static_cast<std::size_t>(j)] = std::exp(-0.3 * x * x);
  }
  double integral = 0.0;
  for (int j = 0; j < g.n; ++j)
    integral += g.weight(j) * model.eta(0, g.node(j)) * u[static_cast<std::size_t>(j)];
  for (double& v : u) v /= integral;
  CHECK(resource_response(u, model, g)[0] == doctest::Approx(0.5).epsilon(1e-14));

  // eta = 2 e^{-x^2}, u = e^{-x^2}: I = 1/(1 + sqrt(2 pi)) by the quadrature oracle
  for (int j = 0; j < g.n; ++j) {
    double x = g.node(j);
    u[static_cast<std::size_t>(j)] = std::exp(-x * x);
  }
  double ref_int = oracle::simpson([](double x) { return 2.0 * std::exp(-2.0 * x * x); },
                                   -8.0, 8.0, 100000);
  double ref = 1.0 / (1.0 + ref_int);
  CHECK(std::abs(ref - 1.0 / (1.0 + std::sqrt(2.0 * M_PI))) < 1e-12);
  CHECK(std::abs(resource_response(u, model, g)[0] - ref) < 1e-8);

  u[5] = std::nan("");
  CHECK_THROWS_AS(resource_response(u, model, g), InvalidInputError);
}

TEST_CASE("resource_response is antitone") {
  TraitGrid g(-6.0, 6.0, 601);
  ResourceModel model({GrowthFunction::gaussian(2.0, 0.0, 1.0),
                       GrowthFunction::gaussian(1.5, 1.0, 0.7)});
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> u1(static_cast<std::size_t>(g.n)), u2(u1.size());
    for (std::size_t j = 0; j < u1.size(); ++j) {
      u1[j] = unif(rng);
      u2[j] = u1[j] + unif(rng);  // u2 >= u1 pointwise
    }
    ResourceVector I1 = resource_response(u1, model, g);
    ResourceVector I2 = resource_response(u2, model, g);
    for (int i = 0; i < 2; ++i) CHECK(I1[i] >= I2[i]);
  }
}

TEST_CASE("growth_rate arithmetic") {
  ResourceModel single({GrowthFunction::gaussian(2.0, 0.0, 1.0)});
  CHECK(single.growth(ResourceVector({0.0}), 0.3) == doctest::Approx(-1.0));
  double x = 0.4;
  ResourceVector inv({1.0 / single.eta(0, x)});
  CHECK(single.growth(inv, x) == doctest::Approx(0.0).epsilon(1e-15));

  // k = 2 with eta_1(0) = 2, eta_2(0) = 0.5: I = (0.25, 1) -> 0
  ResourceModel two({GrowthFunction::gaussian(2.0, 0.0, 1.0),
                     GrowthFunction::gaussian(0.5, 0.0, 2.0)});
  CHECK(two.growth(ResourceVector({0.25, 1.0}), 0.0) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("model validation: decay, roots, invertibility") {
  TraitGrid g(-10.0, 10.0, 801);
  ResourceModel ok({GrowthFunction::gaussian(2.0, 0.0, 1.0)});
  ModelValidation rep = validate_model(ok, g);
  CHECK(rep.hard_ok());
  CHECK(rep.decay_ok);

  // constant eta has no decay -> hard failure
  std::vector<double> xs = {-10.0, 10.0}, ys = {1.5, 1.5};
  ResourceModel flat({GrowthFunction::table(xs, ys)});
  ModelValidation bad = validate_model(flat, g);
  CHECK(!bad.decay_ok);
  CHECK(!bad.hard_ok());

  // duplicate resources -> invertibility warning, not an error
  ResourceModel dup({GrowthFunction::gaussian(2.0, 0.0, 1.0),
                     GrowthFunction::gaussian(2.0, 0.0, 1.0)});
  ModelValidation warn = validate_model(dup, g);
  CHECK(warn.hard_ok());
  CHECK(!warn.invertibility_ok);
  CHECK(!warn.warnings.empty());
}
