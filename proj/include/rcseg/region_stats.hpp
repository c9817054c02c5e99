#pragma once

#include <stdexcept>
#include <vector>

#include "rcseg/raster.hpp"

namespace rcseg {

/// Sufficient statistics of one region's intensities.
struct RegionStats {
  Index count = 0;
  double sum = 0.0;
  double sum_sq = 0.0;

  bool empty() const { return count == 0; }
  double mean() const { return sum / static_cast<double>(count); }

  void add(double v) {
    ++count;
    sum += v;
    sum_sq += v * v;
  }

  /// Removing the last pixel resets to exact zeros.
  void remove(double v) {
    if (count < 1) throw std::logic_error("RegionStats: remove from empty region");
    if (--count == 0) {
      sum = 0.0;
      sum_sq = 0.0;
      return;
    }
    sum -= v;
    sum_sq -= v * v;
  }

  friend bool operator==(const RegionStats&, const RegionStats&) = default;
};

enum class StatsUpdate { Add, Remove };

inline RegionStats region_stats_update(RegionStats stats, double v, StatsUpdate direction) {
  if (direction == StatsUpdate::Add)
    stats.add(v);
  else
    stats.remove(v);
  return stats;
}

/// Region statistics indexed by label. Labels are never reused, so a label
/// whose region vanished keeps an empty slot.
class StatsTable {
 public:
  StatsTable() = default;

  static StatsTable compute(const LabelImage& labels, const Image& image) {
    StatsTable t;
    for (Index i = 0; i < labels.size(); ++i) t.slot(labels[i]).add(image[i]);
    return t;
  }

  const RegionStats& operator[](Label l) const {
    static const RegionStats kEmpty{};
    return l < table_.size() ? table_[l] : kEmpty;
  }

  RegionStats& slot(Label l) {
    if (l >= table_.size()) table_.resize(static_cast<std::size_t>(l) + 1);
    return table_[l];
  }

  Label label_bound() const { return static_cast<Label>(table_.size()); }

  /// Labels with at least one pixel, ascending.
  std::vector<Label> live_labels() const {
    std::vector<Label> out;
    for (Label l = 0; l < table_.size(); ++l)
      if (!table_[l].empty()) out.push_back(l);
    return out;
  }

  std::size_t foreground_count() const {
    std::size_t n = 0;
    for (Label l = 1; l < table_.size(); ++l) n += !table_[l].empty();
    return n;
  }

 private:
  std::vector<RegionStats> table_;
};

}  // namespace rcseg
