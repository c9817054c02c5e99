#pragma once

#include <algorithm>
#include <compare>
#include <map>
#include <set>
#include <vector>

#include "rcseg/connectivity.hpp"
#include "rcseg/raster.hpp"

namespace rcseg {

/// A particle is identified by its pixel and the label it competes with.
struct ParticleKey {
  Index pixel = 0;
  Label competitor = 0;

  auto operator<=>(const ParticleKey&) const = default;
};

/// A contour point: relabeling `pixel` from `owner` to `competitor` is the
/// candidate move it carries. `delta` holds the energy difference used for
/// ranking (raw or filtered, depending on the gradient mode).
struct Particle {
  Index pixel = 0;
  Label owner = 0;
  Label competitor = 0;
  double delta = 0.0;

  ParticleKey key() const { return {pixel, competitor}; }
};

/// The particle set of all region contours. One particle per (pixel,
/// competing label) pair, where the competing label is carried by a neighbor
/// under the background adjacency.
class ContourState {
 public:
  ContourState(const Shape& shape, const Connectivity& conn)
      : adjacency_(shape, conn.background()) {}

  void rescan(const LabelImage& labels) {
    particles_.clear();
    by_owner_.clear();
    for (Index i = 0; i < labels.size(); ++i) scan_pixel(labels, i);
  }

  /// Rebuilds the particles of `pixel` and its neighbors after `pixel` was
  /// relabeled. Nothing outside that neighborhood changes.
  void repair(const LabelImage& labels, Index pixel) {
    erase_pixel(pixel);
    scan_pixel(labels, pixel);
    adjacency_.for_each(pixel, [&](Index n) {
      erase_pixel(n);
      scan_pixel(labels, n);
    });
  }

  std::size_t size() const { return particles_.size(); }
  bool empty() const { return particles_.empty(); }
  bool contains(const ParticleKey& k) const { return particles_.count(k) != 0; }

  /// Particles in key order (pixel, then competitor).
  std::vector<Particle> particles() const {
    std::vector<Particle> out;
    out.reserve(particles_.size());
    for (const auto& [k, owner] : particles_) out.push_back({k.pixel, owner, k.competitor, 0.0});
    return out;
  }

  std::vector<ParticleKey> keys() const {
    std::vector<ParticleKey> out;
    out.reserve(particles_.size());
    for (const auto& kv : particles_) out.push_back(kv.first);
    return out;
  }

  /// Pixels hosting particles owned by `label`, ascending.
  const std::set<Index>& pixels_of(Label label) const {
    static const std::set<Index> kNone;
    const auto it = by_owner_.find(label);
    return it == by_owner_.end() ? kNone : it->second;
  }

  const Neighborhood& adjacency() const { return adjacency_; }

 private:
  void scan_pixel(const LabelImage& labels, Index i) {
    const Label own = labels[i];
    Label found[32];
    int n = 0;
    adjacency_.for_each(i, [&](Index j) {
      const Label l = labels[j];
      if (l == own) return;
      for (int k = 0; k < n; ++k)
        if (found[k] == l) return;
      found[n++] = l;
    });
    if (n == 0) return;
    for (int k = 0; k < n; ++k) particles_.emplace(ParticleKey{i, found[k]}, own);
    by_owner_[own].insert(i);
  }

  void erase_pixel(Index i) {
    auto lo = particles_.lower_bound(ParticleKey{i, 0});
    if (lo == particles_.end() || lo->first.pixel != i) return;
    const Label own = lo->second;
    auto hi = particles_.lower_bound(ParticleKey{i + 1, 0});
    particles_.erase(lo, hi);
    auto it = by_owner_.find(own);
    if (it != by_owner_.end()) {
      it->second.erase(i);
      if (it->second.empty()) by_owner_.erase(it);
    }
  }

  Neighborhood adjacency_;
  std::map<ParticleKey, Label> particles_;
  std::map<Label, std::set<Index>> by_owner_;
};

inline ContourState scan_contour(const LabelImage& labels, const Connectivity& conn) {
  ContourState state(labels.shape(), conn);
  state.rescan(labels);
  return state;
}

}  // namespace rcseg
