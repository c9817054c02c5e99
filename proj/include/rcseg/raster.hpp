#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rcseg {

using Index = std::int64_t;
using Label = std::uint32_t;

/// The single open background region.
inline constexpr Label kBackground = 0;

/// Pixel coordinate (x, y, z). Unused trailing axes are 0.
using Coord = std::array<int, 3>;

/// Extents of a 2D or 3D pixel grid. The x axis is contiguous in memory,
/// then y, then z.
class Shape {
 public:
  Shape() = default;

  Shape(std::initializer_list<int> extents)
      : Shape(std::span<const int>(extents.begin(), extents.size())) {}

  explicit Shape(std::span<const int> extents) {
    if (extents.size() != 2 && extents.size() != 3)
      throw std::invalid_argument("Shape: dimension must be 2 or 3, got " +
                                  std::to_string(extents.size()));
    dim_ = static_cast<int>(extents.size());
    for (int a = 0; a < dim_; ++a) {
      if (extents[a] < 1)
        throw std::invalid_argument("Shape: extents must be positive");
      ext_[a] = extents[a];
    }
    stride_ = {1, ext_[0], static_cast<Index>(ext_[0]) * ext_[1]};
  }

  int dim() const { return dim_; }
  int extent(int axis) const { return ext_[axis]; }
  Index stride(int axis) const { return stride_[axis]; }
  Index size() const {
    return dim_ == 0 ? 0 : static_cast<Index>(ext_[0]) * ext_[1] * ext_[2];
  }

  std::vector<int> extents() const {
    return std::vector<int>(ext_.begin(), ext_.begin() + dim_);
  }

  bool contains(const Coord& c) const {
    for (int a = 0; a < 3; ++a)
      if (c[a] < 0 || c[a] >= ext_[a]) return false;
    return true;
  }

  Index index(const Coord& c) const {
    return c[0] + stride_[1] * c[1] + stride_[2] * c[2];
  }

  Coord coord(Index i) const {
    Coord c{0, 0, 0};
    c[0] = static_cast<int>(i % ext_[0]);
    i /= ext_[0];
    c[1] = static_cast<int>(i % ext_[1]);
    c[2] = static_cast<int>(i / ext_[1]);
    return c;
  }

  friend bool operator==(const Shape& a, const Shape& b) {
    return a.dim_ == b.dim_ && a.ext_ == b.ext_;
  }

 private:
  int dim_ = 0;
  std::array<int, 3> ext_{1, 1, 1};
  std::array<Index, 3> stride_{1, 1, 1};
};

/// Dense d-dimensional grid of T.
template <class T>
class Raster {
 public:
  using value_type = T;

  Raster() = default;
  explicit Raster(Shape shape, T fill = T{})
      : shape_(shape), data_(static_cast<std::size_t>(shape.size()), fill) {}
  Raster(Shape shape, std::vector<T> data) : shape_(shape), data_(std::move(data)) {
    if (static_cast<Index>(data_.size()) != shape_.size())
      throw std::invalid_argument("Raster: data length does not match extents");
  }

  const Shape& shape() const { return shape_; }
  int dim() const { return shape_.dim(); }
  Index size() const { return static_cast<Index>(data_.size()); }

  T& operator[](Index i) { return data_[static_cast<std::size_t>(i)]; }
  const T& operator[](Index i) const { return data_[static_cast<std::size_t>(i)]; }
  T& at(const Coord& c) { return data_[static_cast<std::size_t>(shape_.index(c))]; }
  const T& at(const Coord& c) const {
    return data_[static_cast<std::size_t>(shape_.index(c))];
  }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }
  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  friend bool operator==(const Raster& a, const Raster& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  std::vector<T> data_;
};

using Image = Raster<double>;
using LabelImage = Raster<Label>;

template <class U, class T>
Raster<U> raster_cast(const Raster<T>& in) {
  Raster<U> out(in.shape());
  for (Index i = 0; i < in.size(); ++i) out[i] = static_cast<U>(in[i]);
  return out;
}

}  // namespace rcseg
