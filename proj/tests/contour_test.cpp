#include <gtest/gtest.h>

#include "test_support.hpp"

namespace rcseg {
namespace {

TEST(Contour, SingleForegroundPixelHasInsideAndOutsideParticles) {
  LabelImage l(Shape{3, 3}, kBackground);
  l.at({1, 1, 0}) = 1;
  const ContourState c = scan_contour(l, Connectivity::standard(2));
  // the pixel itself, plus its four face neighbors
  EXPECT_EQ(c.size(), 5u);
  EXPECT_TRUE(c.contains({4, kBackground}));
  EXPECT_TRUE(c.contains({1, 1}));
  EXPECT_FALSE(c.contains({0, 1}));
}

TEST(Contour, ParticlesCarryDistinctOwnerAndCompetitor) {
  std::mt19937_64 rng(3);
  const LabelImage l = testing::random_labels(Shape{12, 9}, rng, 3);
  for (const Particle& p : scan_contour(l, Connectivity::standard(2)).particles()) {
    EXPECT_NE(p.owner, p.competitor);
    EXPECT_EQ(l[p.pixel], p.owner);
  }
}

TEST(Contour, ScanMatchesBruteForceEnumeration) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Shape s = trial % 2 ? Shape{6, 5, 4} : Shape{15, 11};
    const LabelImage l = testing::blocky_labels(s, rng, 3, 2);
    for (Adjacency fg : {Adjacency::Full, Adjacency::Face}) {
      const Connectivity conn{s.dim(), fg};
      EXPECT_EQ(testing::as_map(scan_contour(l, conn)),
                testing::brute_particles(l, conn.background() == Adjacency::Face));
    }
  }
}

TEST(Contour, LocalRepairEqualsFullRescan) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const Shape s = trial % 2 ? Shape{6, 6, 6} : Shape{20, 16};
    LabelImage l = testing::blocky_labels(s, rng, 4, 3);
    const Connectivity conn = Connectivity::standard(s.dim());
    ContourState c = scan_contour(l, conn);
    std::uniform_int_distribution<Index> pick(0, s.size() - 1);
    std::uniform_int_distribution<Label> lab(0, 4);
    for (int step = 0; step < 300; ++step) {
      const Index i = pick(rng);
      l[i] = lab(rng);
      c.repair(l, i);
    }
    EXPECT_EQ(testing::as_map(c), testing::as_map(scan_contour(l, conn)));
  }
}

TEST(Contour, PixelsOfOwnerTracksHostPixels) {
  LabelImage l(Shape{4, 1}, std::vector<Label>{1, 1, 2, 2});
  const ContourState c = scan_contour(l, Connectivity::standard(2));
  EXPECT_EQ(c.pixels_of(1), (std::set<Index>{1}));
  EXPECT_EQ(c.pixels_of(2), (std::set<Index>{2}));
  EXPECT_TRUE(c.pixels_of(9).empty());
}

}  // namespace
}  // namespace rcseg
