#include <gtest/gtest.h>

#include "test_support.hpp"

namespace rcseg {
namespace {

/// All-pairs implementation of the two-sided particle filter.
std::vector<double> brute_filter(const std::vector<FilterItem>& items, const SobolevParams& p) {
  std::vector<double> out(items.size());
  const double half = p.cutoff();
  for (std::size_t i = 0; i < items.size(); ++i) {
    double same = 0, opp = 0;
    int ns = 0, no = 0;
    for (std::size_t j = 0; j < items.size(); ++j) {
      double d2 = 0;
      for (int a = 0; a < 3; ++a) {
        const double d = items[i].position[a] - items[j].position[a];
        d2 += d * d;
      }
      const double d = std::sqrt(d2);
      if (!(d < half)) continue;
      const double r = d / p.length_scale;
      const double k = (1.0 + (r * r - r + 1.0 / 6.0) / (2.0 * p.epsilon)) / p.length_scale;
      if (items[j].owner == items[i].owner) {
        same += k * items[j].delta;
        ++ns;
      } else if (items[j].competitor == items[i].owner) {
        opp += k * items[j].delta;
        ++no;
      }
    }
    out[i] = (ns ? same / ns : 0.0) - (no ? opp / no : 0.0);
  }
  return out;
}

std::vector<FilterItem> random_items(std::mt19937_64& rng, std::size_t n, int dim, int extent,
                                     Label labels) {
  std::uniform_int_distribution<int> pos(0, extent - 1);
  std::uniform_int_distribution<Label> lab(0, labels);
  std::uniform_real_distribution<double> delta(-5.0, 5.0);
  std::vector<FilterItem> items(n);
  for (auto& it : items) {
    it.position = {pos(rng), pos(rng), dim == 3 ? pos(rng) : 0};
    it.owner = lab(rng);
    do it.competitor = lab(rng);
    while (it.competitor == it.owner);
    it.delta = delta(rng);
  }
  return items;
}

TEST(Kernel, ClosedFormValues) {
  const SobolevParams p{12.0, 1.0 / 24.0};
  EXPECT_NEAR(kernel_eval(0.0, p), 0.25, 1e-12);
  EXPECT_NEAR(kernel_eval(3.0, p), 0.0625, 1e-12);
  EXPECT_NEAR(kernel_eval(6.0, p), 0.0, 1e-12);
  EXPECT_NEAR(kernel_eval(-6.0, p), 0.0, 1e-12);
  EXPECT_THROW(kernel_eval(6.5, p), std::domain_error);
}

TEST(Kernel, IsSymmetric) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> r(0.0, 6.0);
  const SobolevParams p;
  for (int k = 0; k < 100; ++k) {
    const double x = r(rng);
    EXPECT_EQ(kernel_eval(x, p), kernel_eval(-x, p));
  }
}

TEST(Kernel, ParamsValidate) {
  EXPECT_THROW((SobolevParams{0.0, 0.1}).validate(), std::invalid_argument);
  EXPECT_THROW((SobolevParams{12.0, 0.0}).validate(), std::invalid_argument);
}

TEST(CellList, QueriesMatchAllPairs) {
  std::mt19937_64 rng(31);
  for (int dim : {2, 3}) {
    const auto items = random_items(rng, 1000, dim, dim == 2 ? 256 : 40, 3);
    const SobolevParams p;
    const CellList cells = build_cell_list(items, dim, p);
    for (std::size_t i = 0; i < items.size(); ++i) {
      std::vector<std::size_t> want;
      for (std::size_t j = 0; j < items.size(); ++j) {
        double d2 = 0;
        for (int a = 0; a < 3; ++a) {
          const double d = items[i].position[a] - items[j].position[a];
          d2 += d * d;
        }
        if (d2 < p.cutoff() * p.cutoff()) want.push_back(j);
      }
      ASSERT_EQ(cells.query(items[i].position, p.cutoff()), want);
    }
  }
}

TEST(CellList, RejectsRadiusBeyondEdge) {
  const std::vector<Coord> pts{{0, 0, 0}};
  const CellList c(pts, 2, 6.0);
  EXPECT_THROW(c.query({0, 0, 0}, 7.0), std::invalid_argument);
}

TEST(SobolevFilter, SingleParticleExample) {
  const std::vector<FilterItem> items{{{10, 10, 0}, 1, 0, 2.0}};
  const SobolevParams p;
  EXPECT_NEAR(sobolev_filter(items, p, build_cell_list(items, 2, p))[0], 0.5, 1e-12);
}

TEST(SobolevFilter, ZeroInZeroOut) {
  std::mt19937_64 rng(2);
  auto items = random_items(rng, 200, 2, 64, 2);
  for (auto& it : items) it.delta = 0.0;
  const SobolevParams p;
  for (double v : sobolev_filter(items, p, build_cell_list(items, 2, p))) EXPECT_EQ(v, 0.0);
}

TEST(SobolevFilter, MatchesAllPairsImplementation) {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 6; ++trial) {
    const int dim = trial % 2 ? 3 : 2;
    const auto items = random_items(rng, 500, dim, dim == 2 ? 128 : 24, 3);
    const SobolevParams p{trial < 3 ? 12.0 : 9.0, 1.0 / 24.0};
    const auto got = sobolev_filter(items, p, build_cell_list(items, dim, p));
    const auto want = brute_filter(items, p);
    for (std::size_t i = 0; i < items.size(); ++i) ASSERT_NEAR(got[i], want[i], 1e-12);
  }
}

TEST(SobolevFilter, IsLinear) {
  std::mt19937_64 rng(34);
  const auto x = random_items(rng, 400, 2, 80, 2);
  auto y = x;
  std::uniform_real_distribution<double> u(-3, 3);
  for (auto& it : y) it.delta = u(rng);
  auto z = x;
  const double a = 1.7, b = -0.4;
  for (std::size_t i = 0; i < z.size(); ++i) z[i].delta = a * x[i].delta + b * y[i].delta;
  const SobolevParams p;
  const CellList cells = build_cell_list(x, 2, p);
  const auto fx = sobolev_filter(x, p, cells);
  const auto fy = sobolev_filter(y, p, cells);
  const auto fz = sobolev_filter(z, p, cells);
  for (std::size_t i = 0; i < z.size(); ++i) EXPECT_NEAR(fz[i], a * fx[i] + b * fy[i], 1e-12);
}

TEST(SobolevFilter, FarParticlesHaveNoInfluence) {
  std::mt19937_64 rng(35);
  auto items = random_items(rng, 300, 2, 100, 2);
  const SobolevParams p;
  const CellList cells = build_cell_list(items, 2, p);
  const std::size_t target = 0;
  const auto base = sobolev_filter_one(items, target, p, cells);
  for (std::size_t j = 1; j < items.size(); ++j) {
    const double dx = items[j].position[0] - items[target].position[0];
    const double dy = items[j].position[1] - items[target].position[1];
    if (dx * dx + dy * dy < p.cutoff() * p.cutoff()) continue;
    items[j].delta += 1000.0;
  }
  EXPECT_EQ(sobolev_filter_one(items, target, p, cells), base);
}

TEST(Oscillation, DecreasingSequenceDoesNotFire) {
  std::vector<double> e;
  std::vector<std::size_t> m;
  for (int i = 0; i < 30; ++i) {
    e.push_back(1000.0 - i);
    m.push_back(5);
  }
  EXPECT_FALSE(detect_oscillation(e, m, 10, 1e-6));
}

TEST(Oscillation, PeriodTwoSequenceFires) {
  std::vector<double> e;
  std::vector<std::size_t> m;
  for (int i = 0; i < 10; ++i) {
    e.push_back(i % 2 ? 100.0 : 101.0);
    m.push_back(3);
  }
  EXPECT_TRUE(detect_oscillation(e, m, 10, 1e-6));
  m.back() = 0;
  EXPECT_FALSE(detect_oscillation(e, m, 10, 1e-6));
}

TEST(Oscillation, NeedsAFullWindow) {
  const std::vector<double> e{5.0, 5.0, 5.0};
  const std::vector<std::size_t> m{1, 1, 1};
  EXPECT_FALSE(detect_oscillation(e, m, 10, 1e-6));
  EXPECT_THROW(detect_oscillation(e, m, 1, 1e-6), std::invalid_argument);
}

TEST(Oscillation, FiresWithinWindowOfFirstPeriodTwoRepeat) {
  // A decreasing prefix followed by a period-2 tail; an independent
  // period detector finds the first index where e[i] == e[i-2].
  std::vector<double> e;
  for (int i = 0; i < 25; ++i) e.push_back(500.0 - 3.0 * i);
  for (int i = 0; i < 30; ++i) e.push_back(i % 2 ? 425.0 : 426.0);
  std::size_t repeat = 0;
  for (std::size_t i = 2; i < e.size(); ++i)
    if (e[i] == e[i - 2]) {
      repeat = i;
      break;
    }
  const std::size_t W = 10;
  std::size_t fired = 0;
  for (std::size_t n = 1; n <= e.size(); ++n) {
    const std::vector<double> head(e.begin(), e.begin() + n);
    const std::vector<std::size_t> moves(n, 4);
    if (detect_oscillation(head, moves, W, 1e-6)) {
      fired = n - 1;
      break;
    }
  }
  ASSERT_GT(fired, 0u);
  EXPECT_LE(fired, repeat + W);
}

}  // namespace
}  // namespace rcseg
