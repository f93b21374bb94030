#pragma once

#include <vector>

#include "evolim/resources.hpp"

namespace evolim {

struct Atom {
  double x = 0.0;
  double weight = 0.0;
};

// Finite nonnegative measure as a sorted list of atoms. After equilibrium
// certification the atom count should not exceed the model's kbar.
struct DiscreteMeasure {
  std::vector<Atom> atoms;

  bool empty() const { return atoms.empty(); }
  double total_weight() const;
  // throws InvalidInputError unless weights > prune_tol and locations are
  // strictly increasing
  void validate(double prune_tol = 1e-10) const;
};

// drop atoms with weight <= prune_tol
DiscreteMeasure prune_atoms(const DiscreteMeasure& mu, double prune_tol);

// merge clusters of atoms closer than radius into their mass-weighted
// centroid (locations may land off-grid)
DiscreteMeasure merge_atoms(const DiscreteMeasure& mu, double radius);

}  // namespace evolim
