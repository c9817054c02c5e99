#pragma once

#include <stdexcept>
#include <vector>

#include "rcseg/contour.hpp"
#include "rcseg/region_stats.hpp"
#include "rcseg/topology.hpp"

namespace rcseg {

class StaleParticle : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MoveResult {
  /// Foreground labels merged into the competitor label by a fusion.
  std::vector<Label> absorbed;
};

/// Relabels p.pixel from p.owner to p.competitor and repairs statistics and
/// particles. The caller is responsible for admissibility. When
/// `merge_fusions` is set, foreground regions the pixel now touches are
/// merged into the competitor region, which triggers a full contour rescan.
inline MoveResult apply_move(LabelImage& labels, ContourState& contour, StatsTable& stats,
                             const Image& image, const Particle& p,
                             const TopologyChecker& topology, bool merge_fusions) {
  if (labels[p.pixel] != p.owner || !contour.contains(p.key()))
    throw StaleParticle("apply_move: particle no longer matches the label raster");
  MoveResult result;
  if (merge_fusions) result.absorbed = topology.fused_labels(labels, p.pixel, p.owner, p.competitor);

  const double v = image[p.pixel];
  stats.slot(p.owner).remove(v);
  stats.slot(p.competitor).add(v);
  labels[p.pixel] = p.competitor;

  if (result.absorbed.empty()) {
    contour.repair(labels, p.pixel);
    return result;
  }
  for (Label k : result.absorbed) {
    for (Index i = 0; i < labels.size(); ++i)
      if (labels[i] == k) {
        labels[i] = p.competitor;
        stats.slot(k).remove(image[i]);
        stats.slot(p.competitor).add(image[i]);
      }
  }
  contour.rescan(labels);
  return result;
}

}  // namespace rcseg
