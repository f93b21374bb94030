#include "evolim/grid.hpp"

#include <cmath>
#include <string>

#include "evolim/errors.hpp"

namespace evolim {

TraitGrid::TraitGrid(double x_min_, double x_max_, int n_)
    : x_min(x_min_), x_max(x_max_), n(n_) {
  if (n < 3) throw InvalidInputError("TraitGrid: need n >= 3, got " + std::to_string(n));
  if (!(x_max > x_min) || !std::isfinite(x_min) || !std::isfinite(x_max))
    throw InvalidInputError("TraitGrid: invalid bounds");
  dx = (x_max - x_min) / (n - 1);
}

std::vector<double> TraitGrid::nodes() const {
  std::vector<double> xs(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) xs[static_cast<std::size_t>(j)] = node(j);
  return xs;
}

int TraitGrid::nearest(double x) const {
  double s = (x - x_min) / dx;
  int j = static_cast<int>(std::lround(s));
  if (j < 0) j = 0;
  if (j > n - 1) j = n - 1;
  return j;
}

}  // namespace evolim
