#pragma once

#include <algorithm>
#include <cstdlib>
#include <vector>

#include "rcseg/connectivity.hpp"
#include "rcseg/contour.hpp"
#include "rcseg/raster.hpp"

namespace rcseg {

struct MoveRules {
  bool allow_fusion = false;
  bool allow_vanish = true;
};

enum class MoveVerdict {
  Admissible,
  Stale,        // stored labels no longer match the raster
  Disconnects,  // owner region would split
  Detaches,     // pixel would not touch the competitor region
  Fusion,       // two distinct foreground regions would touch
  Vanishes,     // last pixel of a foreground region
};

/// Topology control for single-pixel relabelings: foreground regions stay
/// connected under the foreground adjacency.
class TopologyChecker {
 public:
  TopologyChecker(const Shape& shape, const Connectivity& conn)
      : shape_(shape),
        conn_(conn),
        fg_(shape, conn.foreground),
        particle_adj_(shape, conn.background()),
        box_(shape, Adjacency::Full) {
    const auto& offs = box_.offsets();
    const std::size_t n = offs.size();
    box_adj_.resize(n);
    seed_.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      seed_[k] = adjacent(offs[k], Coord{0, 0, 0});
      for (std::size_t m = 0; m < n; ++m)
        if (m != k && adjacent(offs[k], offs[m])) box_adj_[k].push_back(static_cast<int>(m));
    }
  }

  MoveVerdict check(const LabelImage& labels, const Particle& p, const MoveRules& rules) const {
    const Index x = p.pixel;
    if (labels[x] != p.owner || p.owner == p.competitor) return MoveVerdict::Stale;
    bool touches = false;
    particle_adj_.for_each(x, [&](Index n) { touches |= labels[n] == p.competitor; });
    if (!touches) return MoveVerdict::Stale;

    if (p.competitor != kBackground) {
      bool attached = false;
      bool fuses = false;
      fg_.for_each(x, [&](Index n) {
        const Label l = labels[n];
        attached |= l == p.competitor;
        fuses |= l != kBackground && l != p.competitor && l != p.owner;
      });
      if (!attached) return MoveVerdict::Detaches;
      if (fuses && !rules.allow_fusion) return MoveVerdict::Fusion;
    }

    if (p.owner != kBackground) {
      switch (removal_effect(labels, x)) {
        case Removal::Simple:
          break;
        case Removal::Splits:
          return MoveVerdict::Disconnects;
        case Removal::Last:
          if (!rules.allow_vanish) return MoveVerdict::Vanishes;
          break;
      }
    }
    return MoveVerdict::Admissible;
  }

  bool admissible(const LabelImage& labels, const Particle& p, const MoveRules& rules) const {
    return check(labels, p, rules) == MoveVerdict::Admissible;
  }

  /// Foreground labels other than `to` and `from` adjacent to `pixel`; these
  /// merge into `to` when a fusion is executed.
  std::vector<Label> fused_labels(const LabelImage& labels, Index pixel, Label from,
                                  Label to) const {
    std::vector<Label> out;
    if (to == kBackground) return out;
    fg_.for_each(pixel, [&](Index n) {
      const Label l = labels[n];
      if (l != kBackground && l != to && l != from &&
          std::find(out.begin(), out.end(), l) == out.end())
        out.push_back(l);
    });
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  enum class Removal { Simple, Splits, Last };

  bool adjacent(const Coord& a, const Coord& b) const {
    int l1 = 0, linf = 0;
    for (int i = 0; i < 3; ++i) {
      const int d = std::abs(a[i] - b[i]);
      l1 += d;
      linf = std::max(linf, d);
    }
    if (l1 == 0) return false;
    return conn_.foreground == Adjacency::Full ? linf == 1 : l1 == 1;
  }

  Removal removal_effect(const LabelImage& labels, Index x) const {
    const Label own = labels[x];
    const Coord c = shape_.coord(x);
    const auto& offs = box_.offsets();
    const std::size_t n = offs.size();
    bool mask[26] = {};
    Index pix[26] = {};
    bool any = false;
    int first_seed = -1;
    int seed_count = 0;
    for (std::size_t k = 0; k < n; ++k) {
      const Coord q{c[0] + offs[k][0], c[1] + offs[k][1], c[2] + offs[k][2]};
      if (!shape_.contains(q)) continue;
      pix[k] = x + box_.deltas()[k];
      mask[k] = labels[pix[k]] == own;
      any |= mask[k];
      if (mask[k] && seed_[k]) {
        ++seed_count;
        if (first_seed < 0) first_seed = static_cast<int>(k);
      }
    }
    if (seed_count == 0) {
      // x is a component of its own; removing it cannot split anything.
      if (any) return Removal::Simple;
      for (Index i = 0; i < labels.size(); ++i)
        if (i != x && labels[i] == own) return Removal::Simple;
      return Removal::Last;
    }

    // Local test: seeds connected through same-label pixels of the box.
    bool reached[26] = {};
    int stack[26];
    int top = 0;
    int hit = 1;
    reached[first_seed] = true;
    stack[top++] = first_seed;
    while (top > 0) {
      const int k = stack[--top];
      for (int m : box_adj_[k]) {
        if (!mask[m] || reached[m]) continue;
        reached[m] = true;
        hit += seed_[m];
        stack[top++] = m;
      }
    }
    if (hit == seed_count) return Removal::Simple;

    // Inconclusive: flood fill the region without x until all seeds are met.
    std::vector<char> seen(static_cast<std::size_t>(labels.size()), 0);
    std::vector<Index> work;
    seen[x] = 1;
    seen[pix[first_seed]] = 1;
    work.push_back(pix[first_seed]);
    std::vector<Index> targets;
    for (std::size_t k = 0; k < n; ++k)
      if (mask[k] && seed_[k]) targets.push_back(pix[k]);
    int remaining = seed_count - 1;
    while (!work.empty() && remaining > 0) {
      const Index i = work.back();
      work.pop_back();
      fg_.for_each(i, [&](Index j) {
        if (seen[j] || labels[j] != own) return;
        seen[j] = 1;
        if (std::find(targets.begin(), targets.end(), j) != targets.end()) --remaining;
        work.push_back(j);
      });
    }
    return remaining == 0 ? Removal::Simple : Removal::Splits;
  }

  Shape shape_;
  Connectivity conn_;
  Neighborhood fg_;
  Neighborhood particle_adj_;
  Neighborhood box_;
  std::vector<std::vector<int>> box_adj_;
  std::vector<char> seed_;
};

inline bool is_move_admissible(const LabelImage& labels, const Particle& p,
                               const Connectivity& conn, bool allow_fusion, bool allow_vanish) {
  return TopologyChecker(labels.shape(), conn).admissible(labels, p, {allow_fusion, allow_vanish});
}

}  // namespace rcseg
