#pragma once

#include <algorithm>
#include <vector>

#include "rcseg/connectivity.hpp"
#include "rcseg/raster.hpp"

namespace rcseg {

using PixelSet = std::vector<Index>;

/// Connected components of `target` under the foreground adjacency. Components
/// are ordered by their smallest pixel index; pixels within a component are
/// sorted ascending.
inline std::vector<PixelSet> flood_fill_components(const LabelImage& labels, Label target,
                                                   const Connectivity& conn) {
  const Neighborhood nbh(labels.shape(), conn.foreground);
  std::vector<char> seen(static_cast<std::size_t>(labels.size()), 0);
  std::vector<PixelSet> out;
  std::vector<Index> stack;
  for (Index s = 0; s < labels.size(); ++s) {
    if (labels[s] != target || seen[s]) continue;
    PixelSet comp;
    seen[s] = 1;
    stack.push_back(s);
    while (!stack.empty()) {
      const Index i = stack.back();
      stack.pop_back();
      comp.push_back(i);
      nbh.for_each(i, [&](Index n) {
        if (!seen[n] && labels[n] == target) {
          seen[n] = 1;
          stack.push_back(n);
        }
      });
    }
    std::sort(comp.begin(), comp.end());
    out.push_back(std::move(comp));
  }
  return out;
}

/// Labels every connected component of the nonzero pixels of `mask` with a
/// distinct positive label, in order of first pixel.
template <class T>
LabelImage label_components(const Raster<T>& mask, const Connectivity& conn) {
  const Neighborhood nbh(mask.shape(), conn.foreground);
  LabelImage out(mask.shape(), kBackground);
  Label next = 1;
  std::vector<Index> stack;
  for (Index s = 0; s < mask.size(); ++s) {
    if (!mask[s] || out[s] != kBackground) continue;
    out[s] = next;
    stack.push_back(s);
    while (!stack.empty()) {
      const Index i = stack.back();
      stack.pop_back();
      nbh.for_each(i, [&](Index n) {
        if (mask[n] && out[n] == kBackground) {
          out[n] = next;
          stack.push_back(n);
        }
      });
    }
    ++next;
  }
  return out;
}

}  // namespace rcseg
