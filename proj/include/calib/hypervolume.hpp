#ifndef CALIB_HYPERVOLUME_HPP
#define CALIB_HYPERVOLUME_HPP

#include <algorithm>
#include <span>
#include <stdexcept>
#include <vector>

#include "calib/objectives.hpp"

namespace calib {

// Exact 2-D hypervolume of the region dominated by `front` relative to
// `reference` (minimization): sort by chamfer and sum the staircase
// rectangles. Dominated members contribute nothing, so any point list works.
inline double hypervolume_2d(std::span<const ObjectiveVector> front,
                             const ObjectiveVector& reference) {
  if (front.empty()) return 0.0;
  std::vector<ObjectiveVector> sorted(front.begin(), front.end());
  for (const ObjectiveVector& p : sorted) {
    if (p.chamfer > reference.chamfer || p.comp_cost > reference.comp_cost) {
      throw std::invalid_argument(
          "hypervolume_2d: point does not dominate the reference");
    }
  }
  std::sort(sorted.begin(), sorted.end(),
            [](const ObjectiveVector& a, const ObjectiveVector& b) {
              return a.chamfer != b.chamfer ? a.chamfer < b.chamfer
                                            : a.comp_cost < b.comp_cost;
            });
  double volume = 0.0;
  double cap = reference.comp_cost;
  for (const ObjectiveVector& p : sorted) {
    if (p.comp_cost < cap) {
      volume += (reference.chamfer - p.chamfer) * (cap - p.comp_cost);
      cap = p.comp_cost;
    }
  }
  return volume;
}

inline double hypervolume_2d(const std::vector<ObjectiveVector>& front,
                             const ObjectiveVector& reference) {
  return hypervolume_2d(std::span<const ObjectiveVector>(front), reference);
}

}  // namespace calib

#endif  // CALIB_HYPERVOLUME_HPP
