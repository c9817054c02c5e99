#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "rcseg/raster.hpp"

namespace rcseg {

enum class ShapeKind { Disk, Rectangle, Annulus };

/// A primitive of a synthetic scene. Disks and annuli are balls and shells
/// in 3D; rectangles are boxes with inclusive integer corners.
struct ScenePrimitive {
  ShapeKind kind = ShapeKind::Disk;
  std::vector<double> center;
  double radius = 0.0;        // disk radius, annulus outer radius
  double inner_radius = 0.0;  // annulus only
  std::vector<int> min_corner, max_corner;  // rectangle only
  double intensity = 1.0;

  bool covers(const Coord& c, int dim) const {
    if (kind == ShapeKind::Rectangle) {
      for (int a = 0; a < dim; ++a)
        if (c[a] < min_corner[a] || c[a] > max_corner[a]) return false;
      return true;
    }
    double d2 = 0.0;
    for (int a = 0; a < dim; ++a) {
      const double d = c[a] - center[a];
      d2 += d * d;
    }
    if (kind == ShapeKind::Disk) return d2 <= radius * radius;
    return d2 > inner_radius * inner_radius && d2 <= radius * radius;
  }
};

struct SceneSpec {
  std::vector<int> dims;
  double background = 0.0;
  std::vector<ScenePrimitive> shapes;

  void validate() const {
    const Shape s{std::span<const int>(dims)};
    if (background < 0.0) throw std::invalid_argument("SceneSpec: negative background");
    for (const auto& p : shapes) {
      if (p.intensity < 0.0) throw std::invalid_argument("SceneSpec: negative intensity");
      for (int a = 0; a < s.dim(); ++a) {
        double lo, hi;
        if (p.kind == ShapeKind::Rectangle) {
          if (p.min_corner.size() != dims.size() || p.max_corner.size() != dims.size())
            throw std::invalid_argument("SceneSpec: rectangle corner dimension mismatch");
          lo = p.min_corner[a];
          hi = p.max_corner[a];
          if (lo > hi) throw std::invalid_argument("SceneSpec: rectangle min exceeds max");
        } else {
          if (p.center.size() != dims.size())
            throw std::invalid_argument("SceneSpec: center dimension mismatch");
          if (p.radius <= 0.0) throw std::invalid_argument("SceneSpec: radius must be > 0");
          if (p.kind == ShapeKind::Annulus &&
              (p.inner_radius < 0.0 || p.inner_radius >= p.radius))
            throw std::invalid_argument("SceneSpec: annulus needs 0 <= inner < outer radius");
          lo = p.center[a] - p.radius;
          hi = p.center[a] + p.radius;
        }
        if (lo < 0.0 || hi > s.extent(a) - 1)
          throw std::invalid_argument("SceneSpec: shape outside image bounds");
      }
    }
  }
};

struct NoiseSpec {
  double psnr = 6.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(psnr > 0.0)) throw std::invalid_argument("NoiseSpec: psnr must be > 0");
  }
};

/// Full synthetic pipeline: scene, Gaussian PSF width, noise.
struct SynthSpec {
  SceneSpec scene;
  double psf_sigma = 0.0;
  NoiseSpec noise;
};

struct RenderedScene {
  LabelImage labels;
  Image intensities;
};

/// Shape i gets label i + 1; later shapes overwrite earlier ones.
inline RenderedScene render_scene(const SceneSpec& spec) {
  spec.validate();
  const Shape shape{std::span<const int>(spec.dims)};
  RenderedScene out{LabelImage(shape, kBackground), Image(shape, spec.background)};
  for (Index i = 0; i < shape.size(); ++i) {
    const Coord c = shape.coord(i);
    for (std::size_t k = 0; k < spec.shapes.size(); ++k)
      if (spec.shapes[k].covers(c, shape.dim())) {
        out.labels[i] = static_cast<Label>(k + 1);
        out.intensities[i] = spec.shapes[k].intensity;
      }
  }
  return out;
}

/// Normalized 1D Gaussian weights for offsets -radius..radius, radius = ceil(4 sigma).
inline std::vector<double> gaussian_weights(double sigma) {
  const int radius = static_cast<int>(std::ceil(4.0 * sigma));
  std::vector<double> w(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (int k = -radius; k <= radius; ++k) {
    w[k + radius] = std::exp(-0.5 * k * k / (sigma * sigma));
    total += w[k + radius];
  }
  for (double& x : w) x /= total;
  return w;
}

namespace detail {

/// Symmetric boundary extension (edge sample repeated).
inline int mirror(int i, int n) {
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

}  // namespace detail

/// Separable Gaussian convolution, per-axis truncation at 4 sigma, mirror
/// boundaries. sigma = 0 returns the input unchanged.
inline Image blur(const Image& in, double sigma) {
  if (sigma < 0.0) throw std::invalid_argument("blur: sigma must be >= 0");
  if (sigma == 0.0) return in;
  const auto w = gaussian_weights(sigma);
  const int radius = static_cast<int>(w.size() / 2);
  const Shape& s = in.shape();
  Image cur = in;
  Image next(s);
  for (int a = 0; a < s.dim(); ++a) {
    const int n = s.extent(a);
    const Index stride = s.stride(a);
    for (Index i = 0; i < s.size(); ++i) {
      const Coord c = s.coord(i);
      const Index base = i - stride * c[a];
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k)
        acc += w[k + radius] * cur[base + stride * detail::mirror(c[a] + k, n)];
      next[i] = acc;
    }
    std::swap(cur, next);
  }
  return cur;
}

/// Counter-based uniform stream: the values for (seed, stream) do not depend
/// on evaluation order.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream) : key_(mix(seed) ^ mix(~stream)) {}

  std::uint64_t next_u64() { return mix(key_ + 0x9E3779B97F4A7C15ull * ++counter_); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

 private:
  static std::uint64_t mix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Poisson sample: sequential inversion for mean < 30, Hormann's
/// transformed rejection (PTRS) above.
inline std::int64_t sample_poisson(double mean, CounterRng& rng) {
  if (mean <= 0.0) return 0;
  if (mean < 30.0) {
    const double u = rng.uniform();
    double p = std::exp(-mean);
    double cdf = p;
    std::int64_t k = 0;
    while (u > cdf && k < 1000) {
      ++k;
      p *= mean / static_cast<double>(k);
      cdf += p;
    }
    return k;
  }
  const double slam = std::sqrt(mean);
  const double loglam = std::log(mean);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = rng.uniform() - 0.5;
    const double v = rng.uniform();
    const double us = 0.5 - std::abs(u);
    const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<std::int64_t>(k);
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
        -mean + k * loglam - std::lgamma(k + 1.0))
      return static_cast<std::int64_t>(k);
  }
}

/// Mean photon count at the brightest pixel for a given PSNR: peak / sqrt(peak) = psnr.
inline double peak_count_for_psnr(double psnr) { return psnr * psnr; }

/// Rescales so the peak equals psnr^2 and draws one Poisson count per pixel
/// from a stream keyed by (seed, pixel index).
inline Image poissonize(const Image& in, const NoiseSpec& spec) {
  spec.validate();
  double peak = 0.0;
  for (double v : in.values()) {
    if (v < 0.0) throw std::invalid_argument("poissonize: negative intensity");
    peak = std::max(peak, v);
  }
  Image out(in.shape(), 0.0);
  if (peak == 0.0) return out;
  const double scale = peak_count_for_psnr(spec.psnr) / peak;
  for (Index i = 0; i < in.size(); ++i) {
    CounterRng rng(spec.seed, static_cast<std::uint64_t>(i));
    out[i] = static_cast<double>(sample_poisson(in[i] * scale, rng));
  }
  return out;
}

struct SynthResult {
  LabelImage truth;
  Image clean;
  Image blurred;
  Image noisy;
};

/// render -> blur -> poissonize.
inline SynthResult synthesize(const SynthSpec& spec) {
  RenderedScene r = render_scene(spec.scene);
  SynthResult out;
  out.truth = std::move(r.labels);
  out.clean = std::move(r.intensities);
  out.blurred = blur(out.clean, spec.psf_sigma);
  out.noisy = poissonize(out.blurred, spec.noise);
  return out;
}

/// 64x64 scene with two disks and one rectangle, sigma 2, PSNR 6.
inline SynthSpec desk_benchmark(std::uint64_t noise_seed = 1) {
  SynthSpec spec;
  spec.scene.dims = {64, 64};
  spec.scene.background = 0.15;
  ScenePrimitive a;
  a.kind = ShapeKind::Disk;
  a.center = {19, 20};
  a.radius = 11;
  a.intensity = 1.0;
  ScenePrimitive b;
  b.kind = ShapeKind::Disk;
  b.center = {44, 43};
  b.radius = 12;
  b.intensity = 0.8;
  ScenePrimitive c;
  c.kind = ShapeKind::Rectangle;
  c.min_corner = {38, 6};
  c.max_corner = {58, 22};
  c.intensity = 0.6;
  spec.scene.shapes = {a, b, c};
  spec.psf_sigma = 2.0;
  spec.noise = {6.0, noise_seed};
  return spec;
}

// JSON spec file: {"dims": [...], "background": b, "shapes": [...],
// "psf_sigma": s, "noise": {"psnr": p, "seed": n}}

inline ScenePrimitive primitive_from_json(const nlohmann::json& j) {
  ScenePrimitive p;
  const std::string type = j.at("type").get<std::string>();
  p.intensity = j.at("intensity").get<double>();
  if (type == "disk") {
    p.kind = ShapeKind::Disk;
    p.center = j.at("center").get<std::vector<double>>();
    p.radius = j.at("radius").get<double>();
  } else if (type == "annulus") {
    p.kind = ShapeKind::Annulus;
    p.center = j.at("center").get<std::vector<double>>();
    p.inner_radius = j.at("inner_radius").get<double>();
    p.radius = j.at("outer_radius").get<double>();
  } else if (type == "rectangle") {
    p.kind = ShapeKind::Rectangle;
    p.min_corner = j.at("min").get<std::vector<int>>();
    p.max_corner = j.at("max").get<std::vector<int>>();
  } else {
    throw std::invalid_argument("unknown shape type: " + type);
  }
  return p;
}

inline nlohmann::json primitive_to_json(const ScenePrimitive& p) {
  nlohmann::json j;
  switch (p.kind) {
    case ShapeKind::Disk:
      j = {{"type", "disk"}, {"center", p.center}, {"radius", p.radius}};
      break;
    case ShapeKind::Annulus:
      j = {{"type", "annulus"},
           {"center", p.center},
           {"inner_radius", p.inner_radius},
           {"outer_radius", p.radius}};
      break;
    case ShapeKind::Rectangle:
      j = {{"type", "rectangle"}, {"min", p.min_corner}, {"max", p.max_corner}};
      break;
  }
  j["intensity"] = p.intensity;
  return j;
}

inline SynthSpec synth_spec_from_json(const nlohmann::json& j) {
  SynthSpec s;
  s.scene.dims = j.at("dims").get<std::vector<int>>();
  s.scene.background = j.value("background", 0.0);
  for (const auto& p : j.value("shapes", nlohmann::json::array()))
    s.scene.shapes.push_back(primitive_from_json(p));
  s.psf_sigma = j.value("psf_sigma", 0.0);
  if (j.contains("noise")) {
    s.noise.psnr = j["noise"].value("psnr", 6.0);
    s.noise.seed = j["noise"].value("seed", std::uint64_t{0});
  }
  s.scene.validate();
  s.noise.validate();
  if (s.psf_sigma < 0.0) throw std::invalid_argument("psf_sigma must be >= 0");
  return s;
}

inline nlohmann::json synth_spec_to_json(const SynthSpec& s) {
  nlohmann::json shapes = nlohmann::json::array();
  for (const auto& p : s.scene.shapes) shapes.push_back(primitive_to_json(p));
  return {{"dims", s.scene.dims},
          {"background", s.scene.background},
          {"shapes", shapes},
          {"psf_sigma", s.psf_sigma},
          {"noise", {{"psnr", s.noise.psnr}, {"seed", s.noise.seed}}}};
}

}  // namespace rcseg
