#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "rcseg/connectivity.hpp"
#include "rcseg/raster.hpp"
#include "rcseg/region_stats.hpp"

namespace rcseg {

enum class RegionModel { PiecewiseConstant, PiecewiseSmooth };
enum class NoiseModel { Gaussian, Poisson };

struct EnergyConfig {
  RegionModel region = RegionModel::PiecewiseConstant;
  NoiseModel noise = NoiseModel::Gaussian;
  double lambda = 0.0;
  int smooth_radius = 8;

  void validate() const {
    if (!(lambda >= 0.0)) throw std::invalid_argument("EnergyConfig: lambda must be >= 0");
    if (region == RegionModel::PiecewiseSmooth && smooth_radius < 1)
      throw std::invalid_argument("EnergyConfig: smooth radius must be >= 1");
  }
};

/// total = external + lambda * internal
struct EnergyValue {
  double external = 0.0;
  double internal = 0.0;
  double total = 0.0;
};

/// Poisson means are floored here inside log terms.
inline constexpr double kPoissonMeanFloor = 1e-8;

class DegenerateStatistics : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

/// Sum over a region of [theta - I log theta] with theta the region mean.
inline double poisson_region_energy(Index n, double sum) {
  if (n == 0) return 0.0;
  const double theta = std::max(sum / static_cast<double>(n), kPoissonMeanFloor);
  return static_cast<double>(n) * theta - sum * std::log(theta);
}

/// Negative log-likelihood of v given a predicted mean sum/n. An empty
/// prediction set predicts zero intensity.
inline double pixel_cost(double v, Index n, double sum, NoiseModel noise) {
  const double mean = n > 0 ? sum / static_cast<double>(n) : 0.0;
  if (noise == NoiseModel::Gaussian) {
    const double r = v - mean;
    return r * r;
  }
  const double theta = std::max(mean, kPoissonMeanFloor);
  return theta - v * std::log(theta);
}

struct LocalSum {
  Index count = 0;
  double sum = 0.0;
};

}  // namespace detail

/// Change of the piecewise-constant data term when a pixel of intensity v
/// moves from region `from` to region `to`, with both means re-estimated.
inline double delta_external_pc(const RegionStats& from, const RegionStats& to, double v,
                                NoiseModel noise) {
  if (from.empty()) throw DegenerateStatistics("delta_external: source region is empty");
  if (noise == NoiseModel::Gaussian) {
    double d = 0.0;
    if (from.count > 1) {
      const double n = static_cast<double>(from.count);
      const double r = v - from.mean();
      d -= n / (n - 1.0) * r * r;
    }
    if (to.count > 0) {
      const double n = static_cast<double>(to.count);
      const double r = v - to.mean();
      d += n / (n + 1.0) * r * r;
    }
    return d;
  }
  using detail::poisson_region_energy;
  const double from_after =
      from.count == 1 ? 0.0 : poisson_region_energy(from.count - 1, from.sum - v);
  return from_after - poisson_region_energy(from.count, from.sum) +
         poisson_region_energy(to.count + 1, to.sum + v) -
         poisson_region_energy(to.count, to.sum);
}

/// Change in the number of face-adjacent pixel pairs with differing labels
/// when `pixel` is relabeled to `to`. Always within [-2d, 2d].
inline int delta_internal(const LabelImage& labels, Index pixel, Label to) {
  const Shape& s = labels.shape();
  const Coord c = s.coord(pixel);
  const Label from = labels[pixel];
  int d = 0;
  for (int a = 0; a < s.dim(); ++a) {
    if (c[a] > 0) {
      const Label n = labels[pixel - s.stride(a)];
      d += (n != to) - (n != from);
    }
    if (c[a] + 1 < s.extent(a)) {
      const Label n = labels[pixel + s.stride(a)];
      d += (n != to) - (n != from);
    }
  }
  return d;
}

/// Number of face-adjacent pixel pairs with differing labels.
inline Index perimeter(const LabelImage& labels) {
  const Shape& s = labels.shape();
  Index p = 0;
  for (Index i = 0; i < labels.size(); ++i) {
    const Coord c = s.coord(i);
    for (int a = 0; a < s.dim(); ++a)
      if (c[a] + 1 < s.extent(a) && labels[i] != labels[i + s.stride(a)]) ++p;
  }
  return p;
}

/// Integer offsets within a Euclidean ball of radius R, origin excluded.
class BallOffsets {
 public:
  BallOffsets() = default;
  BallOffsets(const Shape& shape, int radius) : shape_(shape), radius_(radius) {
    const int zr = shape.dim() == 3 ? radius : 0;
    for (int dz = -zr; dz <= zr; ++dz)
      for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx) {
          if (dx == 0 && dy == 0 && dz == 0) continue;
          if (dx * dx + dy * dy + dz * dz > radius * radius) continue;
          offsets_.push_back({dx, dy, dz});
          deltas_.push_back(dx + shape.stride(1) * dy + shape.stride(2) * dz);
        }
  }

  std::size_t size() const { return offsets_.size(); }

  template <class F>
  void for_each(Index i, F&& f) const {
    const Coord c = shape_.coord(i);
    bool inside = true;
    for (int a = 0; a < shape_.dim(); ++a)
      inside &= c[a] >= radius_ && c[a] + radius_ < shape_.extent(a);
    if (inside) {
      for (Index d : deltas_) f(i + d);
      return;
    }
    for (std::size_t k = 0; k < offsets_.size(); ++k) {
      const Coord q{c[0] + offsets_[k][0], c[1] + offsets_[k][1], c[2] + offsets_[k][2]};
      if (shape_.contains(q)) f(i + deltas_[k]);
    }
  }

 private:
  Shape shape_;
  int radius_ = 0;
  std::vector<Coord> offsets_;
  std::vector<Index> deltas_;
};

/// From-scratch energy; the reference for every incremental difference.
/// The data term is accumulated in extended precision.
///
/// Piecewise constant: each pixel is predicted by its region mean.
/// Piecewise smooth: each pixel is predicted by the mean of the other pixels
/// of its own region inside the ball of radius R around it.
inline EnergyValue evaluate_total(const LabelImage& labels, const Image& image,
                                  const EnergyConfig& cfg) {
  if (!(labels.shape() == image.shape()))
    throw std::invalid_argument("evaluate_total: label and image extents differ");
  EnergyValue e;
  long double external = 0.0L;
  if (cfg.region == RegionModel::PiecewiseConstant) {
    const StatsTable stats = StatsTable::compute(labels, image);
    for (Index i = 0; i < labels.size(); ++i) {
      const RegionStats& r = stats[labels[i]];
      const double mean = r.mean();
      if (cfg.noise == NoiseModel::Gaussian) {
        const double d = image[i] - mean;
        external += d * d;
      } else {
        const double theta = std::max(mean, kPoissonMeanFloor);
        external += theta - image[i] * std::log(theta);
      }
    }
  } else {
    const BallOffsets ball(labels.shape(), cfg.smooth_radius);
    for (Index i = 0; i < labels.size(); ++i) {
      Index n = 0;
      double s = 0.0;
      ball.for_each(i, [&](Index j) {
        if (labels[j] == labels[i]) {
          ++n;
          s += image[j];
        }
      });
      external += detail::pixel_cost(image[i], n, s, cfg.noise);
    }
  }
  e.external = static_cast<double>(external);
  e.internal = static_cast<double>(perimeter(labels));
  e.total = e.external + cfg.lambda * e.internal;
  return e;
}

/// Incremental energy differences for single-pixel relabelings. The
/// piecewise-smooth model keeps, per pixel, the count and intensity sum of
/// the other same-label pixels in its ball; bind() builds it and commit()
/// keeps it current.
class EnergyModel {
 public:
  EnergyModel(const Image& image, const EnergyConfig& cfg) : image_(&image), cfg_(cfg) {
    cfg_.validate();
    if (cfg_.region == RegionModel::PiecewiseSmooth)
      ball_ = BallOffsets(image.shape(), cfg_.smooth_radius);
  }

  const EnergyConfig& config() const { return cfg_; }
  const Image& image() const { return *image_; }

  void bind(const LabelImage& labels) {
    if (!(labels.shape() == image_->shape()))
      throw std::invalid_argument("EnergyModel: label and image extents differ");
    if (cfg_.region != RegionModel::PiecewiseSmooth) return;
    own_.assign(static_cast<std::size_t>(labels.size()), {});
    const Image& img = *image_;
    for (Index i = 0; i < labels.size(); ++i) {
      detail::LocalSum acc;
      ball_.for_each(i, [&](Index j) {
        if (labels[j] == labels[i]) {
          ++acc.count;
          acc.sum += img[j];
        }
      });
      own_[i] = acc;
    }
  }

  /// E_external(after) - E_external(before) for relabeling `pixel` from its
  /// current label `from` to `to`.
  double delta_external(const LabelImage& labels, const StatsTable& stats, Index pixel, Label from,
                        Label to) const {
    if (labels[pixel] != from)
      throw std::invalid_argument("delta_external: pixel does not carry the source label");
    const double v = (*image_)[pixel];
    if (cfg_.region == RegionModel::PiecewiseConstant)
      return delta_external_pc(stats[from], stats[to], v, cfg_.noise);
    if (stats[from].empty()) throw DegenerateStatistics("delta_external: source region is empty");

    const Image& img = *image_;
    const NoiseModel noise = cfg_.noise;
    double d = 0.0;
    Index nb = 0;
    double sb = 0.0;
    ball_.for_each(pixel, [&](Index j) {
      const Label l = labels[j];
      if (l == to) {
        ++nb;
        sb += img[j];
        const auto& o = own_[j];
        d += detail::pixel_cost(img[j], o.count + 1, o.sum + v, noise) -
             detail::pixel_cost(img[j], o.count, o.sum, noise);
      } else if (l == from) {
        const auto& o = own_[j];
        d += detail::pixel_cost(img[j], o.count - 1, o.sum - v, noise) -
             detail::pixel_cost(img[j], o.count, o.sum, noise);
      }
    });
    const auto& self = own_[pixel];
    d += detail::pixel_cost(v, nb, sb, noise) - detail::pixel_cost(v, self.count, self.sum, noise);
    return d;
  }

  double delta_total(const LabelImage& labels, const StatsTable& stats, Index pixel, Label from,
                     Label to) const {
    return delta_external(labels, stats, pixel, from, to) +
           cfg_.lambda * delta_internal(labels, pixel, to);
  }

  /// Must be called while `labels` still holds the pre-move state.
  void commit(const LabelImage& labels, Index pixel, Label from, Label to) {
    if (cfg_.region != RegionModel::PiecewiseSmooth) return;
    const Image& img = *image_;
    const double v = img[pixel];
    detail::LocalSum mine;
    ball_.for_each(pixel, [&](Index j) {
      const Label l = labels[j];
      if (l == to) {
        ++mine.count;
        mine.sum += img[j];
        ++own_[j].count;
        own_[j].sum += v;
      } else if (l == from) {
        if (--own_[j].count == 0)
          own_[j].sum = 0.0;
        else
          own_[j].sum -= v;
      }
    });
    own_[pixel] = mine;
  }

 private:
  const Image* image_;
  EnergyConfig cfg_;
  BallOffsets ball_;
  std::vector<detail::LocalSum> own_;
};

}  // namespace rcseg
