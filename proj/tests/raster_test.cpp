#include <gtest/gtest.h>

#include "test_support.hpp"

namespace rcseg {
namespace {

TEST(Shape, RejectsBadDimensionAndExtents) {
  EXPECT_THROW(Shape({4}), std::invalid_argument);
  EXPECT_THROW(Shape({2, 2, 2, 2}), std::invalid_argument);
  EXPECT_THROW(Shape({0, 3}), std::invalid_argument);
}

TEST(Shape, IndexAndCoordAreInverse) {
  const Shape s{5, 4, 3};
  EXPECT_EQ(s.size(), 60);
  for (Index i = 0; i < s.size(); ++i) EXPECT_EQ(s.index(s.coord(i)), i);
  EXPECT_EQ(s.index({1, 0, 0}), 1);
  EXPECT_EQ(s.index({0, 1, 0}), 5);
  EXPECT_EQ(s.index({0, 0, 1}), 20);
}

TEST(Shape, ContainsChecksEveryAxis) {
  const Shape s{3, 2};
  EXPECT_TRUE(s.contains({2, 1, 0}));
  EXPECT_FALSE(s.contains({3, 1, 0}));
  EXPECT_FALSE(s.contains({0, -1, 0}));
  EXPECT_FALSE(s.contains({0, 0, 1}));
}

TEST(Raster, DataLengthMustMatch) {
  EXPECT_THROW(Raster<int>(Shape{2, 2}, std::vector<int>{1, 2, 3}), std::invalid_argument);
  Raster<int> r(Shape{2, 2}, std::vector<int>{1, 2, 3, 4});
  EXPECT_EQ(r.at({1, 1, 0}), 4);
}

TEST(Neighborhood, CountsMatchAdjacencyType) {
  EXPECT_EQ(Neighborhood(Shape{5, 5}, Adjacency::Face).count(), 4u);
  EXPECT_EQ(Neighborhood(Shape{5, 5}, Adjacency::Full).count(), 8u);
  EXPECT_EQ(Neighborhood(Shape{5, 5, 5}, Adjacency::Face).count(), 6u);
  EXPECT_EQ(Neighborhood(Shape{5, 5, 5}, Adjacency::Full).count(), 26u);
}

TEST(Neighborhood, BorderPixelsOnlyVisitInBoundsNeighbors) {
  const Shape s{4, 3};
  const Neighborhood full(s, Adjacency::Full);
  std::vector<Index> seen;
  full.for_each(0, [&](Index n) { seen.push_back(n); });
  std::sort(seen.begin(), seen.end());
  EXPECT_EQ(seen, (std::vector<Index>{1, 4, 5}));
}

TEST(Connectivity, BackgroundIsComplement) {
  EXPECT_EQ(Connectivity::standard(2).background(), Adjacency::Face);
  EXPECT_EQ((Connectivity{3, Adjacency::Face}).background(), Adjacency::Full);
}

TEST(Parallel, VisitsEveryIndexOnce) {
  std::vector<int> hits(10000, 0);
  parallel_for(hits.size(), [&](std::size_t i) { ++hits[i]; }, 16);
  for (int h : hits) EXPECT_EQ(h, 1);
}

}  // namespace
}  // namespace rcseg
