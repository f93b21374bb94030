#include "evolim/measure.hpp"

#include <cmath>

#include "evolim/errors.hpp"

namespace evolim {

double DiscreteMeasure::total_weight() const {
  double s = 0.0;
  for (const auto& a : atoms) s += a.weight;
  return s;
}

void DiscreteMeasure::validate(double prune_tol) const {
  for (std::size_t l = 0; l < atoms.size(); ++l) {
    if (!std::isfinite(atoms[l].x) || !std::isfinite(atoms[l].weight))
      throw InvalidInputError("DiscreteMeasure: non-finite atom");
    if (!(atoms[l].weight > prune_tol))
      throw InvalidInputError("DiscreteMeasure: atom weight below prune tolerance");
    if (l > 0 && !(atoms[l].x > atoms[l - 1].x))
      throw InvalidInputError("DiscreteMeasure: locations must be strictly increasing");
  }
}

DiscreteMeasure prune_atoms(const DiscreteMeasure& mu, double prune_tol) {
  DiscreteMeasure out;
  for (const auto& a : mu.atoms)
    if (a.weight > prune_tol) out.atoms.push_back(a);
  return out;
}

DiscreteMeasure merge_atoms(const DiscreteMeasure& mu, double radius) {
  DiscreteMeasure out;
  std::size_t l = 0;
  while (l < mu.atoms.size()) {
    double w = mu.atoms[l].weight;
    double xw = mu.atoms[l].x * w;
    std::size_t r = l;
    while (r + 1 < mu.atoms.size() && mu.atoms[r + 1].x - mu.atoms[r].x <= radius) {
      ++r;
      xw += mu.atoms[r].x * mu.atoms[r].weight;
      w += mu.atoms[r].weight;
    }
    out.atoms.push_back(Atom{xw / w, w});
    l = r + 1;
  }
  return out;
}

}  // namespace evolim
