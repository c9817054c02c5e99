#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "rcseg/parallel.hpp"
#include "rcseg/raster.hpp"

namespace rcseg {

/// Length scale E (pixels) and smoothness epsilon of the H1 inner product.
/// With epsilon = 1/24 the kernel vanishes at |r| = E/2.
struct SobolevParams {
  double length_scale = 12.0;
  double epsilon = 1.0 / 24.0;

  double cutoff() const { return length_scale / 2.0; }

  void validate() const {
    if (!(length_scale > 0.0)) throw std::invalid_argument("SobolevParams: E must be > 0");
    if (!(epsilon > 0.0)) throw std::invalid_argument("SobolevParams: epsilon must be > 0");
  }
};

/// K(r) = (1/E) (1 + ((|r|/E)^2 - |r|/E + 1/6) / (2 eps)),  |r| <= E/2.
inline double kernel_eval(double r, const SobolevParams& params) {
  const double E = params.length_scale;
  const double a = std::abs(r);
  if (a > E / 2.0) throw std::domain_error("kernel_eval: |r| exceeds E/2");
  const double u = a / E;
  return (1.0 + (u * u - u + 1.0 / 6.0) / (2.0 * params.epsilon)) / E;
}

/// Uniform bucket grid over nonnegative integer points. Bucket edge equals
/// the interaction cutoff, so a cutoff query visits the 3^d bucket block
/// around the query point.
class CellList {
 public:
  CellList(std::span<const Coord> points, int dim, double edge)
      : points_(points.begin(), points.end()), dim_(dim), edge_(edge) {
    if (!(edge > 0.0)) throw std::invalid_argument("CellList: edge must be > 0");
    if (dim != 2 && dim != 3) throw std::invalid_argument("CellList: bad dimension");
    for (const Coord& p : points_)
      for (int a = 0; a < dim_; ++a) {
        if (p[a] < 0) throw std::invalid_argument("CellList: negative coordinate");
        grid_[a] = std::max(grid_[a], bucket_of(p[a]) + 1);
      }
    const std::size_t cells =
        static_cast<std::size_t>(grid_[0]) * grid_[1] * grid_[2];
    start_.assign(cells + 1, 0);
    for (const Coord& p : points_) ++start_[cell_index(p) + 1];
    for (std::size_t c = 0; c < cells; ++c) start_[c + 1] += start_[c];
    members_.resize(points_.size());
    std::vector<std::size_t> fill(start_.begin(), start_.end() - 1);
    for (std::size_t i = 0; i < points_.size(); ++i) members_[fill[cell_index(points_[i])]++] = i;
    sorted_.resize(points_.size());
    for (std::size_t k = 0; k < members_.size(); ++k) sorted_[k] = points_[members_[k]];
  }

  std::size_t size() const { return points_.size(); }
  double edge() const { return edge_; }
  const Coord& point(std::size_t i) const { return points_[i]; }

  /// Point indices grouped by cell; traversing in this order keeps
  /// consecutive queries on the same cells.
  const std::vector<std::size_t>& cell_order() const { return members_; }

  /// Bucket coordinates of a point: floor(coordinate / edge).
  Coord bucket(const Coord& p) const {
    Coord b{0, 0, 0};
    for (int a = 0; a < dim_; ++a) b[a] = bucket_of(p[a]);
    return b;
  }

  /// Calls f(index, squared_distance) for every point with
  /// squared_distance < radius^2. Requires radius <= edge.
  template <class F>
  void for_each_within(const Coord& center, double radius, F&& f) const {
    for_each_slot_within(center, radius,
                         [&](std::size_t slot, double d2) { f(members_[slot], d2); });
  }

  /// Like for_each_within, but reports positions in cell_order() instead of
  /// point indices.
  template <class F>
  void for_each_slot_within(const Coord& center, double radius, F&& f) const {
    if (radius > edge_) throw std::invalid_argument("CellList: query radius exceeds cell edge");
    if (points_.empty()) return;
    const double r2 = radius * radius;
    const Coord b = bucket(center);
    Coord lo{0, 0, 0}, hi{0, 0, 0};
    for (int a = 0; a < dim_; ++a) {
      lo[a] = std::max(b[a] - 1, 0);
      hi[a] = std::min(b[a] + 1, grid_[a] - 1);
    }
    for (int z = lo[2]; z <= hi[2]; ++z)
      for (int y = lo[1]; y <= hi[1]; ++y)
        for (int x = lo[0]; x <= hi[0]; ++x) {
          const std::size_t c = static_cast<std::size_t>(x) +
                                static_cast<std::size_t>(grid_[0]) *
                                    (static_cast<std::size_t>(y) +
                                     static_cast<std::size_t>(grid_[1]) * z);
          for (std::size_t k = start_[c]; k < start_[c + 1]; ++k) {
            double d2 = 0.0;
            for (int a = 0; a < dim_; ++a) {
              const double d = sorted_[k][a] - center[a];
              d2 += d * d;
            }
            if (d2 < r2) f(k, d2);
          }
        }
  }

  std::vector<std::size_t> query(const Coord& center, double radius) const {
    std::vector<std::size_t> out;
    for_each_within(center, radius, [&](std::size_t q, double) { out.push_back(q); });
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  int bucket_of(int v) const { return static_cast<int>(std::floor(v / edge_)); }

  std::size_t cell_index(const Coord& p) const {
    const Coord b = bucket(p);
    return static_cast<std::size_t>(b[0]) +
           static_cast<std::size_t>(grid_[0]) *
               (static_cast<std::size_t>(b[1]) + static_cast<std::size_t>(grid_[1]) * b[2]);
  }

  std::vector<Coord> points_;
  int dim_;
  double edge_;
  std::array<int, 3> grid_{1, 1, 1};
  std::vector<std::size_t> start_;
  std::vector<std::size_t> members_;
  std::vector<Coord> sorted_;
};

/// One particle as seen by the filter.
struct FilterItem {
  Coord position;
  Label owner = 0;
  Label competitor = 0;
  double delta = 0.0;
};

inline CellList build_cell_list(std::span<const FilterItem> items, int dim,
                                const SobolevParams& params) {
  std::vector<Coord> pts;
  pts.reserve(items.size());
  for (const auto& it : items) pts.push_back(it.position);
  return CellList(pts, dim, params.cutoff());
}

/// Filtered delta of item p:
///   mean over same-owner partners q of K(d) dE_q
///   - mean over partners q whose competitor is p's owner of K(d) dE_q,
/// with partners restricted to Euclidean distance d < E/2. An empty side
/// contributes zero. Reads only `items`; writes `out[p]` once per particle.
inline double sobolev_filter_one(std::span<const FilterItem> items, std::size_t p,
                                 const SobolevParams& params, const CellList& cells) {
  const FilterItem& me = items[p];
  double same = 0.0, opposite = 0.0;
  std::size_t n_same = 0, n_opposite = 0;
  cells.for_each_within(me.position, params.cutoff(), [&](std::size_t q, double d2) {
    const FilterItem& other = items[q];
    if (other.owner == me.owner) {
      same += kernel_eval(std::sqrt(d2), params) * other.delta;
      ++n_same;
    } else if (other.competitor == me.owner) {
      opposite += kernel_eval(std::sqrt(d2), params) * other.delta;
      ++n_opposite;
    }
  });
  double f = 0.0;
  if (n_same > 0) f += same / static_cast<double>(n_same);
  if (n_opposite > 0) f -= opposite / static_cast<double>(n_opposite);
  return f;
}

/// Filters every particle. Partner data is packed in cell order so each
/// neighbor scan reads contiguous memory; each output is written once.
inline std::vector<double> sobolev_filter(std::span<const FilterItem> items,
                                          const SobolevParams& params, const CellList& cells) {
  struct Packed {
    Label owner;
    Label competitor;
    double delta;
  };
  const auto& order = cells.cell_order();
  std::vector<Packed> packed(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    const FilterItem& it = items[order[k]];
    packed[k] = {it.owner, it.competitor, it.delta};
  }
  std::vector<double> out(items.size());
  parallel_for(order.size(), [&](std::size_t k) {
    const std::size_t p = order[k];
    const Label own = items[p].owner;
    double same = 0.0, opposite = 0.0;
    std::size_t n_same = 0, n_opposite = 0;
    cells.for_each_slot_within(items[p].position, params.cutoff(), [&](std::size_t q, double d2) {
      const Packed& other = packed[q];
      if (other.owner == own) {
        same += kernel_eval(std::sqrt(d2), params) * other.delta;
        ++n_same;
      } else if (other.competitor == own) {
        opposite += kernel_eval(std::sqrt(d2), params) * other.delta;
        ++n_opposite;
      }
    });
    double f = 0.0;
    if (n_same > 0) f += same / static_cast<double>(n_same);
    if (n_opposite > 0) f -= opposite / static_cast<double>(n_opposite);
    out[p] = f;
  });
  return out;
}

/// True when the last `window` iterations all moved pixels but made no net
/// progress: the lower of the first two energies in the window exceeds the
/// lower of the last two by no more than tol_rel * |E_current|. Taking the
/// lower of each pair makes a period-two cycle fire for either window parity.
inline bool detect_oscillation(std::span<const double> energies,
                               std::span<const std::size_t> accepted, std::size_t window,
                               double tol_rel) {
  if (window < 2) throw std::invalid_argument("detect_oscillation: window must be >= 2");
  if (energies.size() != accepted.size())
    throw std::invalid_argument("detect_oscillation: history lengths differ");
  if (energies.size() < window) return false;
  const std::size_t first = energies.size() - window;
  for (std::size_t i = first; i < energies.size(); ++i)
    if (accepted[i] == 0) return false;
  const std::size_t last = energies.size() - 1;
  const double start = std::min(energies[first], energies[first + 1]);
  const double end = std::min(energies[last - 1], energies[last]);
  return start - end <= tol_rel * std::abs(energies[last]);
}

}  // namespace rcseg
