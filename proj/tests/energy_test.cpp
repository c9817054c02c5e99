#include <gtest/gtest.h>

#include "test_support.hpp"

namespace rcseg {
namespace {

EnergyConfig config(RegionModel r, NoiseModel n, double lambda, int radius = 3) {
  EnergyConfig c;
  c.region = r;
  c.noise = n;
  c.lambda = lambda;
  c.smooth_radius = radius;
  return c;
}

TEST(Energy, GaussianPcThreeByThreeExample) {
  const Shape s{3, 3};
  Image img(s, std::vector<double>{1, 5, 5, 1, 5, 5, 1, 5, 5});
  LabelImage l(s, std::vector<Label>{1, 0, 0, 1, 0, 0, 1, 0, 0});
  const EnergyConfig cfg = config(RegionModel::PiecewiseConstant, NoiseModel::Gaussian, 0.0);
  // Direct sums of squared residuals: before 0; after moving (0,1) into
  // region 0, region 1 = {1,1} and region 0 = {1,5,5,5,5,5,5}.
  const double mean0 = 31.0 / 7.0;
  const double after = (1 - mean0) * (1 - mean0) + 6 * (5 - mean0) * (5 - mean0);
  const StatsTable stats = StatsTable::compute(l, img);
  EXPECT_NEAR(delta_external_pc(stats[1], stats[0], img[3], NoiseModel::Gaussian), after, 1e-12);
  EXPECT_NEAR(evaluate_total(l, img, cfg).total, 0.0, 1e-12);
}

TEST(Energy, PerimeterCountsFaceAdjacentDisagreements) {
  LabelImage l(Shape{3, 3}, kBackground);
  l.at({1, 1, 0}) = 1;
  EXPECT_EQ(perimeter(l), 4);
  LabelImage cube(Shape{3, 3, 3}, kBackground);
  cube.at({1, 1, 1}) = 2;
  EXPECT_EQ(perimeter(cube), 6);
}

TEST(Energy, DeltaInternalMatchesPerimeterDifference) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const Shape s = trial % 2 ? Shape{5, 4, 3} : Shape{7, 6};
    LabelImage l = testing::random_labels(s, rng, 3);
    const Index i = std::uniform_int_distribution<Index>(0, s.size() - 1)(rng);
    const Label to = std::uniform_int_distribution<Label>(0, 3)(rng);
    const Index before = perimeter(l);
    const int d = delta_internal(l, i, to);
    l[i] = to;
    EXPECT_EQ(perimeter(l) - before, d);
    EXPECT_LE(std::abs(d), 2 * s.dim());
  }
}

TEST(Energy, PoissonMeanIsFlooredInsteadOfInfinite) {
  LabelImage l(Shape{2, 1}, std::vector<Label>{0, 1});
  Image img(l.shape(), std::vector<double>{0.0, 4.0});
  const EnergyConfig cfg = config(RegionModel::PiecewiseConstant, NoiseModel::Poisson, 0.0);
  const EnergyValue e = evaluate_total(l, img, cfg);
  EXPECT_TRUE(std::isfinite(e.total));
  EXPECT_NEAR(e.external, kPoissonMeanFloor + (4.0 - 4.0 * std::log(4.0)), 1e-12);
}

TEST(Energy, GaussianPcInvariantUnderIntensityShift) {
  std::mt19937_64 rng(4);
  const Shape s{20, 20};
  const Image img = testing::random_image(s, rng);
  Image shifted = img;
  for (double& v : shifted.values()) v += 123.25;
  const LabelImage l = testing::random_labels(s, rng, 4);
  const EnergyConfig cfg = config(RegionModel::PiecewiseConstant, NoiseModel::Gaussian, 0.3);
  const double a = evaluate_total(l, img, cfg).total;
  const double b = evaluate_total(l, shifted, cfg).total;
  EXPECT_NEAR(a, b, 1e-9 * std::abs(a));
}

TEST(Energy, DeltaFromEmptySourceThrows) {
  EXPECT_THROW(delta_external_pc(RegionStats{}, RegionStats{}, 1.0, NoiseModel::Gaussian),
               DegenerateStatistics);
}

TEST(Energy, EvaluateTotalDoesNotDependOnGradientMode) {
  std::mt19937_64 rng(8);
  const Shape s{16, 16};
  const Image img = testing::random_counts(s, rng);
  const LabelImage l = testing::blocky_labels(s, rng, 2, 4);
  const EnergyConfig cfg = config(RegionModel::PiecewiseSmooth, NoiseModel::Poisson, 0.04);
  OptimizerConfig a, b;
  a.mode = GradientMode::L2;
  b.mode = GradientMode::Sobolev;
  const Segmenter sa(img, l, cfg, {}, a, Connectivity::standard(2));
  const Segmenter sb(img, l, cfg, {}, b, Connectivity::standard(2));
  EXPECT_EQ(sa.energy(), sb.energy());
  EXPECT_EQ(sa.energy(), evaluate_total(l, img, cfg).total);
}

class IncrementalEnergy
    : public ::testing::TestWithParam<std::tuple<RegionModel, NoiseModel, int>> {};

TEST_P(IncrementalEnergy, SingleFlipsMatchFullRecomputation) {
  const auto [region, noise, dim] = GetParam();
  std::mt19937_64 rng(100 + static_cast<int>(region) * 10 + static_cast<int>(noise) + dim);
  const Shape s = dim == 2 ? Shape{14, 12} : Shape{7, 6, 5};
  const EnergyConfig cfg = config(region, noise, 0.7, 2);
  for (int trial = 0; trial < 4; ++trial) {
    const Image img = noise == NoiseModel::Poisson ? testing::random_counts(s, rng)
                                                   : testing::random_image(s, rng);
    LabelImage l = testing::random_labels(s, rng, 3);
    StatsTable stats = StatsTable::compute(l, img);
    EnergyModel model(img, cfg);
    model.bind(l);
    double running = evaluate_total(l, img, cfg).total;
    std::uniform_int_distribution<Index> pick(0, s.size() - 1);
    std::uniform_int_distribution<Label> lab(0, 3);
    for (int step = 0; step < 150; ++step) {
      const Index i = pick(rng);
      const Label from = l[i], to = lab(rng);
      if (to == from) continue;
      const double before = evaluate_total(l, img, cfg).total;
      const double d = model.delta_total(l, stats, i, from, to);
      model.commit(l, i, from, to);
      stats.slot(from).remove(img[i]);
      stats.slot(to).add(img[i]);
      l[i] = to;
      const double after = evaluate_total(l, img, cfg).total;
      ASSERT_TRUE(testing::near(d, after - before, 1e-9, 1e-12))
          << "step " << step << ": " << d << " vs " << after - before;
      running += d;
    }
    EXPECT_TRUE(testing::near(running, evaluate_total(l, img, cfg).total, 1e-9, 1e-9));
  }
}

INSTANTIATE_TEST_SUITE_P(
    Models, IncrementalEnergy,
    ::testing::Combine(::testing::Values(RegionModel::PiecewiseConstant,
                                         RegionModel::PiecewiseSmooth),
                       ::testing::Values(NoiseModel::Gaussian, NoiseModel::Poisson),
                       ::testing::Values(2, 3)));

}  // namespace
}  // namespace rcseg
