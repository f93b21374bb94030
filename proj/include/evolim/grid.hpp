#pragma once

#include <vector>

namespace evolim {

// Uniform 1-D discretization of the trait axis. All fields in the solvers are
// sampled on these nodes.
struct TraitGrid {
  double x_min = 0.0;
  double x_max = 1.0;
  int n = 3;
  double dx = 0.5;

  TraitGrid() = default;
  TraitGrid(double x_min_, double x_max_, int n_);

  double node(int j) const { return x_min + j * dx; }
  std::vector<double> nodes() const;

  // trapezoid quadrature weight of node j
  double weight(int j) const { return (j == 0 || j == n - 1) ? 0.5 * dx : dx; }

  int nearest(double x) const;
  bool contains(double x) const { return x >= x_min && x <= x_max; }
  double length() const { return x_max - x_min; }

  bool operator==(const TraitGrid& o) const {
    return x_min == o.x_min && x_max == o.x_max && n == o.n;
  }
};

}  // namespace evolim
