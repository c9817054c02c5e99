#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "rcseg/components.hpp"
#include "rcseg/connectivity.hpp"
#include "rcseg/raster.hpp"
#include "rcseg/synth.hpp"

namespace rcseg {

struct InitResult {
  LabelImage labels;
  /// Set when the scheme could not produce a foreground (constant image).
  bool degenerate = false;
};

/// One box inset by a tenth of each extent (at least one pixel).
inline LabelImage rectangle_init(const Shape& shape) {
  LabelImage out(shape, kBackground);
  std::array<int, 3> lo{0, 0, 0}, hi{0, 0, 0};
  for (int a = 0; a < shape.dim(); ++a) {
    const int inset = std::max(1, shape.extent(a) / 10);
    lo[a] = std::min(inset, shape.extent(a) - 1);
    hi[a] = std::max(lo[a], shape.extent(a) - 1 - inset);
  }
  for (Index i = 0; i < shape.size(); ++i) {
    const Coord c = shape.coord(i);
    bool in = true;
    for (int a = 0; a < shape.dim(); ++a) in &= c[a] >= lo[a] && c[a] <= hi[a];
    if (in) out[i] = 1;
  }
  return out;
}

namespace detail {

template <class F>
void for_each_in_ball(const Shape& shape, const Coord& center, int radius, F&& f) {
  const int zr = shape.dim() == 3 ? radius : 0;
  for (int dz = -zr; dz <= zr; ++dz)
    for (int dy = -radius; dy <= radius; ++dy)
      for (int dx = -radius; dx <= radius; ++dx) {
        if (dx * dx + dy * dy + dz * dz > radius * radius) continue;
        const Coord q{center[0] + dx, center[1] + dy, center[2] + dz};
        if (shape.contains(q)) f(shape.index(q));
      }
}

}  // namespace detail

/// n bubbles per axis of radius r on a uniform lattice; bubble centers sit at
/// floor((i + 1/2) * extent / n). Bubbles are labeled 1.. in raster order of
/// their centers and must not touch.
inline LabelImage bubble_grid(const Shape& shape, int n, int radius) {
  if (n < 1 || radius < 0) throw std::invalid_argument("bubble_grid: need n >= 1 and r >= 0");
  std::array<std::vector<int>, 3> centers;
  for (int a = 0; a < 3; ++a) {
    if (a >= shape.dim()) {
      centers[a] = {0};
      continue;
    }
    for (int i = 0; i < n; ++i) {
      const int c = static_cast<int>(std::floor((i + 0.5) * shape.extent(a) / n));
      if (i > 0 && c - centers[a].back() < 2 * radius + 2)
        throw std::invalid_argument("bubble_grid: bubbles would touch");
      centers[a].push_back(c);
    }
  }
  LabelImage out(shape, kBackground);
  Label next = 1;
  for (int z : centers[2])
    for (int y : centers[1])
      for (int x : centers[0]) {
        detail::for_each_in_ball(shape, Coord{x, y, z}, radius, [&](Index i) { out[i] = next; });
        ++next;
      }
  return out;
}

inline constexpr int kOtsuBins = 256;

/// Between-class-variance-maximizing threshold over a 256-bin histogram:
/// class 0 holds bins <= t. Returns the smallest maximizing t, or -1 when
/// every split leaves a class empty.
inline int otsu_threshold(std::span<const std::uint64_t> hist) {
  if (hist.size() != kOtsuBins) throw std::invalid_argument("otsu_threshold: need 256 bins");
  long double total = 0, total_sum = 0;
  for (int i = 0; i < kOtsuBins; ++i) {
    total += hist[i];
    total_sum += static_cast<long double>(i) * hist[i];
  }
  int best = -1;
  long double best_score = -1;
  long double w0 = 0, s0 = 0;
  for (int t = 0; t < kOtsuBins - 1; ++t) {
    w0 += hist[t];
    s0 += static_cast<long double>(t) * hist[t];
    if (w0 == 0 || w0 == total) continue;
    // N^2 * sigma_b^2 = (S w0 - N s0)^2 / (w0 (N - w0))
    const long double num = total_sum * w0 - total * s0;
    const long double score = num * num / (w0 * (total - w0));
    if (score > best_score) {
      best_score = score;
      best = t;
    }
  }
  return best;
}

/// Histogram bin of v over [lo, hi].
inline int otsu_bin(double v, double lo, double hi) {
  const int b = static_cast<int>(std::floor((v - lo) / (hi - lo) * kOtsuBins));
  return std::clamp(b, 0, kOtsuBins - 1);
}

/// Otsu threshold, then one label per connected component of the pixels
/// above it.
inline InitResult otsu_init(const Image& image, const Connectivity& conn) {
  InitResult out{LabelImage(image.shape(), kBackground), false};
  const auto [mn, mx] = std::minmax_element(image.values().begin(), image.values().end());
  if (mn == image.values().end() || *mn == *mx) {
    out.degenerate = true;
    return out;
  }
  std::vector<std::uint64_t> hist(kOtsuBins, 0);
  for (double v : image.values()) ++hist[otsu_bin(v, *mn, *mx)];
  const int t = otsu_threshold(hist);
  if (t < 0) {
    out.degenerate = true;
    return out;
  }
  Raster<std::uint8_t> mask(image.shape(), 0);
  for (Index i = 0; i < image.size(); ++i) mask[i] = otsu_bin(image[i], *mn, *mx) > t;
  out.labels = label_components(mask, conn);
  return out;
}

/// Gaussian-blur with sigma, then seed a ball of radius r at each strict local
/// maximum (all full-adjacency neighbors lower), brightest first. A seed that
/// would touch an earlier one is dropped.
inline InitResult maxima_bubbles(const Image& image, double sigma, int radius) {
  if (radius < 0) throw std::invalid_argument("maxima_bubbles: radius must be >= 0");
  const Image smooth = blur(image, sigma);
  const Shape& shape = image.shape();
  const Neighborhood full(shape, Adjacency::Full);
  std::vector<Index> maxima;
  for (Index i = 0; i < shape.size(); ++i) {
    bool strict = true;
    full.for_each(i, [&](Index n) { strict &= smooth[n] < smooth[i]; });
    if (strict) maxima.push_back(i);
  }
  std::stable_sort(maxima.begin(), maxima.end(),
                   [&](Index a, Index b) { return smooth[a] > smooth[b]; });

  InitResult out{LabelImage(shape, kBackground), false};
  Label next = 1;
  std::vector<Index> ball;
  for (Index m : maxima) {
    ball.clear();
    detail::for_each_in_ball(shape, shape.coord(m), radius, [&](Index i) { ball.push_back(i); });
    bool clear = true;
    for (Index i : ball) {
      clear &= out.labels[i] == kBackground;
      full.for_each(i, [&](Index n) { clear &= out.labels[n] == kBackground; });
      if (!clear) break;
    }
    if (!clear) continue;
    for (Index i : ball) out.labels[i] = next;
    ++next;
  }
  out.degenerate = next == 1;
  return out;
}

}  // namespace rcseg
