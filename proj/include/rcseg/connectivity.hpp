#pragma once

#include <stdexcept>
#include <vector>

#include "rcseg/raster.hpp"

namespace rcseg {

/// Face: pixels sharing a face (4 in 2D, 6 in 3D).
/// Full: pixels sharing a face, edge or corner (8 in 2D, 26 in 3D).
enum class Adjacency { Face, Full };

inline Adjacency complement(Adjacency a) {
  return a == Adjacency::Face ? Adjacency::Full : Adjacency::Face;
}

/// Foreground/background adjacency pair. The background always uses the
/// complement of the foreground adjacency so the pair is Jordan-compatible.
struct Connectivity {
  int dim = 2;
  Adjacency foreground = Adjacency::Full;

  Adjacency background() const { return complement(foreground); }

  static Connectivity standard(int dim) { return {dim, Adjacency::Full}; }
};

/// Neighbor offsets of one adjacency type, with a fast path for pixels whose
/// whole 3^d box lies inside the grid.
class Neighborhood {
 public:
  Neighborhood(const Shape& shape, Adjacency adjacency) : shape_(shape) {
    const int d = shape.dim();
    if (d != 2 && d != 3) throw std::invalid_argument("Neighborhood: bad dimension");
    const int zr = d == 3 ? 1 : 0;
    for (int dz = -zr; dz <= zr; ++dz)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int nz = (dx != 0) + (dy != 0) + (dz != 0);
          if (nz == 0) continue;
          if (adjacency == Adjacency::Face && nz != 1) continue;
          offsets_.push_back({dx, dy, dz});
          deltas_.push_back(dx + shape.stride(1) * dy + shape.stride(2) * dz);
        }
  }

  const std::vector<Coord>& offsets() const { return offsets_; }
  const std::vector<Index>& deltas() const { return deltas_; }
  std::size_t count() const { return offsets_.size(); }

  bool interior(const Coord& c) const {
    for (int a = 0; a < shape_.dim(); ++a)
      if (c[a] < 1 || c[a] > shape_.extent(a) - 2) return false;
    return true;
  }

  /// Calls f(neighbor_index) for every in-bounds neighbor of pixel i.
  template <class F>
  void for_each(Index i, F&& f) const {
    const Coord c = shape_.coord(i);
    if (interior(c)) {
      for (Index d : deltas_) f(i + d);
      return;
    }
    for (std::size_t k = 0; k < offsets_.size(); ++k) {
      const Coord n{c[0] + offsets_[k][0], c[1] + offsets_[k][1], c[2] + offsets_[k][2]};
      if (shape_.contains(n)) f(i + deltas_[k]);
    }
  }

 private:
  Shape shape_;
  std::vector<Coord> offsets_;
  std::vector<Index> deltas_;
};

}  // namespace rcseg
