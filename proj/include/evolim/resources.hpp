#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "evolim/grid.hpp"

namespace evolim {

// Resource concentrations I_i in (0,1]. Thin wrapper; the range invariant is
// guaranteed by resource_response / bar_resources, while pointwise helpers
// (growth evaluation) accept arbitrary values.
struct ResourceVector {
  std::vector<double> I;

  ResourceVector() = default;
  explicit ResourceVector(std::vector<double> v) : I(std::move(v)) {}
  static ResourceVector ones(int k) { return ResourceVector(std::vector<double>(k, 1.0)); }

  int k() const { return static_cast<int>(I.size()); }
  double operator[](int i) const { return I[static_cast<std::size_t>(i)]; }
  double& operator[](int i) { return I[static_cast<std::size_t>(i)]; }
};

// One growth function eta_i(x) > 0: a Gaussian bump a*exp(-((x-c)/w)^2) or a
// user table with linear interpolation.
class GrowthFunction {
 public:
  static GrowthFunction gaussian(double amplitude, double center, double width);
  static GrowthFunction table(std::vector<double> xs, std::vector<double> ys);

  double value(double x) const;
  double deriv(double x) const;
  double deriv2(double x) const;

  bool is_table() const { return kind_ == Kind::Table; }

 private:
  enum class Kind { Gaussian, Table };
  Kind kind_ = Kind::Gaussian;
  double a_ = 1.0, c_ = 0.0, w_ = 1.0;
  std::vector<double> xs_, ys_;
};

// The k growth functions with their envelope bound
// eta_bar(x) = sum_i (|eta_i| + |eta_i'| + |eta_i''|).
class ResourceModel {
 public:
  ResourceModel(std::vector<GrowthFunction> eta, int kbar = 0);

  int k() const { return static_cast<int>(eta_.size()); }
  int kbar() const { return kbar_; }

  double eta(int i, double x) const { return eta_[static_cast<std::size_t>(i)].value(x); }
  double eta_deriv(int i, double x) const { return eta_[static_cast<std::size_t>(i)].deriv(x); }
  double envelope(double x) const;

  // sum_i I_i eta_i(x) - 1
  double growth(const ResourceVector& I, double x) const;

 private:
  std::vector<GrowthFunction> eta_;
  int kbar_ = 0;
};

// Per-run tabulation of the model on a grid (the solvers' hot path).
struct ResourceTable {
  TraitGrid grid;
  int k = 0;
  std::vector<double> eta;      // k x n, row-major
  std::vector<double> log_eta;  // log of eta (>= -inf)
  std::vector<double> envelope;
  double sup_envelope = 0.0;

  ResourceTable() = default;
  ResourceTable(const ResourceModel& model, const TraitGrid& g);

  double at(int i, int j) const { return eta[static_cast<std::size_t>(i) * grid.n + j]; }
  double log_at(int i, int j) const {
    return log_eta[static_cast<std::size_t>(i) * grid.n + j];
  }
  // growth field sum_i I_i eta_i(x_j) - 1 into out (size n)
  void growth_field(const ResourceVector& I, std::span<double> out) const;
};

// I_i = 1 / (1 + integral of eta_i u dx), trapezoid quadrature on the grid.
// u must be finite and nonnegative.
ResourceVector resource_response(std::span<const double> u, const ResourceModel& model,
                                 const TraitGrid& grid);
ResourceVector resource_response(std::span<const double> u, const ResourceTable& table);

struct ModelValidation {
  bool decay_ok = true;           // envelope small at both grid ends
  double envelope_left = 0.0, envelope_right = 0.0;
  bool roots_ok = true;           // sampled sign-change counts <= kbar
  int worst_sign_changes = 0;
  bool invertibility_ok = true;   // sampled eta_i(x_j) matrices not degenerate
  double worst_hadamard = 1.0;
  std::vector<std::string> errors;
  std::vector<std::string> warnings;
  bool hard_ok() const { return errors.empty(); }
};

// Best-effort structural validation on the grid: envelope decay at the ends
// (hard error), sampled root counts and invertibility (warnings only).
ModelValidation validate_model(const ResourceModel& model, const TraitGrid& grid,
                               double boundary_tol = 1e-2, int samples = 64,
                               std::uint64_t seed = 0);

}  // namespace evolim
