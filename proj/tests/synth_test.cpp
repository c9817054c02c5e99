#include <gtest/gtest.h>

#include "test_support.hpp"

namespace rcseg {
namespace {

TEST(Synth, EmptySceneIsBackground) {
  SceneSpec spec;
  spec.dims = {8, 6};
  spec.background = 0.3;
  const RenderedScene r = render_scene(spec);
  for (Index i = 0; i < r.labels.size(); ++i) {
    EXPECT_EQ(r.labels[i], kBackground);
    EXPECT_EQ(r.intensities[i], 0.3);
  }
}

TEST(Synth, DiskCardinalityMatchesEnumeration) {
  SceneSpec spec;
  spec.dims = {64, 64};
  ScenePrimitive disk;
  disk.kind = ShapeKind::Disk;
  disk.center = {32, 32};
  disk.radius = 10;
  disk.intensity = 1.0;
  spec.shapes = {disk};
  const RenderedScene r = render_scene(spec);
  Index want = 0;
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) want += (x - 32) * (x - 32) + (y - 32) * (y - 32) <= 100;
  EXPECT_EQ(std::count(r.labels.values().begin(), r.labels.values().end(), 1u), want);
}

TEST(Synth, SpecValidation) {
  SceneSpec spec;
  spec.dims = {16, 16};
  ScenePrimitive ring;
  ring.kind = ShapeKind::Annulus;
  ring.center = {8, 8};
  ring.radius = 3;
  ring.inner_radius = 4;
  spec.shapes = {ring};
  EXPECT_THROW(spec.validate(), std::invalid_argument);
  spec.shapes[0].inner_radius = 1;
  spec.background = -1.0;
  EXPECT_THROW(spec.validate(), std::invalid_argument);
}

TEST(Synth, BlurPreservesConstants) {
  const Image c(Shape{20, 15}, 4.5);
  const Image b = blur(c, 2.5);
  for (double v : b.values()) EXPECT_NEAR(v, 4.5, 1e-12);
  EXPECT_EQ(blur(c, 0.0), c);
}

TEST(Synth, BlurOfImpulseIsTheSampledGaussian) {
  const Shape s{41, 41};
  Image img(s, 0.0);
  img.at({20, 20, 0}) = 1.0;
  const Image b = blur(img, 2.0);
  double norm = 0.0;
  for (int k = -8; k <= 8; ++k) norm += std::exp(-k * k / 8.0);
  for (int y = 12; y <= 28; ++y)
    for (int x = 12; x <= 28; ++x) {
      const int dx = x - 20, dy = y - 20;
      const double want = std::exp(-dx * dx / 8.0) * std::exp(-dy * dy / 8.0) / (norm * norm);
      EXPECT_NEAR(b.at({x, y, 0}), want, 1e-12);
    }
  EXPECT_EQ(b.at({11, 20, 0}), 0.0);
}

TEST(Synth, MirrorBoundary) {
  EXPECT_EQ(detail::mirror(-1, 5), 0);
  EXPECT_EQ(detail::mirror(-2, 5), 1);
  EXPECT_EQ(detail::mirror(5, 5), 4);
  EXPECT_EQ(detail::mirror(6, 5), 3);
}

TEST(Synth, PoissonLawOfLargeNumbers) {
  for (double mean : {3.0, 36.0, 120.0}) {
    const Image flat(Shape{100, 100}, 1.0);
    NoiseSpec n;
    n.psnr = std::sqrt(mean);
    n.seed = 17;
    const Image noisy = poissonize(flat, n);
    double sum = 0, sq = 0;
    for (double v : noisy.values()) {
      EXPECT_EQ(v, std::floor(v));
      sum += v;
      sq += v * v;
    }
    const double N = static_cast<double>(noisy.size());
    const double m = sum / N;
    const double var = sq / N - m * m;
    EXPECT_LE(std::abs(m - mean), 5.0 * std::sqrt(mean / N)) << "mean " << mean;
    EXPECT_GE(var / m, 0.9);
    EXPECT_LE(var / m, 1.1);
  }
}

TEST(Synth, NoiseIsSeeded) {
  const SynthSpec spec = desk_benchmark(5);
  EXPECT_EQ(synthesize(spec).noisy, synthesize(spec).noisy);
  EXPECT_FALSE(synthesize(desk_benchmark(6)).noisy == synthesize(spec).noisy);
}

TEST(Synth, PeakCountFollowsPsnr) {
  EXPECT_EQ(peak_count_for_psnr(6.0), 36.0);
}

TEST(Synth, JsonRoundTrip) {
  const SynthSpec spec = desk_benchmark(3);
  const SynthSpec back = synth_spec_from_json(synth_spec_to_json(spec));
  EXPECT_EQ(synth_spec_to_json(back), synth_spec_to_json(spec));
  EXPECT_EQ(synthesize(back).noisy, synthesize(spec).noisy);
}

}  // namespace
}  // namespace rcseg
