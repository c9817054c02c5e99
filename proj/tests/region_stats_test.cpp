#include <gtest/gtest.h>

#include "test_support.hpp"

namespace rcseg {
namespace {

TEST(RegionStats, AddThenRemoveRestoresState) {
  RegionStats s;
  s.add(3.0);
  s.add(5.0);
  const RegionStats before = s;
  s = region_stats_update(s, 7.5, StatsUpdate::Add);
  s = region_stats_update(s, 7.5, StatsUpdate::Remove);
  EXPECT_EQ(s.count, before.count);
  EXPECT_DOUBLE_EQ(s.sum, before.sum);
  EXPECT_DOUBLE_EQ(s.sum_sq, before.sum_sq);
}

TEST(RegionStats, RemovingLastPixelGivesExactZeros) {
  RegionStats s;
  s.add(0.1);
  s.add(0.2);
  s.remove(0.1);
  s.remove(0.2);
  EXPECT_EQ(s, RegionStats{});
}

TEST(RegionStats, RemoveFromEmptyThrows) {
  RegionStats s;
  EXPECT_THROW(s.remove(1.0), std::logic_error);
}

TEST(RegionStats, IncrementalMeanMatchesRecomputation) {
  std::mt19937_64 rng(7);
  const Shape shape{24, 24};
  const Image img = testing::random_image(shape, rng, 0.0, 100.0);
  LabelImage labels = testing::random_labels(shape, rng, 3);
  StatsTable t = StatsTable::compute(labels, img);
  std::uniform_int_distribution<Index> pick(0, shape.size() - 1);
  std::uniform_int_distribution<Label> lab(0, 3);
  for (int step = 0; step < 5000; ++step) {
    const Index i = pick(rng);
    const Label to = lab(rng);
    if (to == labels[i] || t[labels[i]].count == 1) continue;
    t.slot(labels[i]).remove(img[i]);
    t.slot(to).add(img[i]);
    labels[i] = to;
  }
  const StatsTable fresh = StatsTable::compute(labels, img);
  for (Label l = 0; l <= 3; ++l) {
    ASSERT_EQ(t[l].count, fresh[l].count);
    if (t[l].count == 0) continue;
    EXPECT_NEAR(t[l].mean(), fresh[l].mean(), 1e-12 * fresh[l].mean());
  }
}

TEST(StatsTable, LiveLabelsAndForegroundCount) {
  LabelImage l(Shape{3, 1}, std::vector<Label>{0, 4, 2});
  Image img(Shape{3, 1}, 1.0);
  const StatsTable t = StatsTable::compute(l, img);
  EXPECT_EQ(t.live_labels(), (std::vector<Label>{0, 2, 4}));
  EXPECT_EQ(t.foreground_count(), 2u);
  EXPECT_TRUE(t[17].empty());
}

}  // namespace
}  // namespace rcseg
