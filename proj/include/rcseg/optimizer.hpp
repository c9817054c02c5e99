#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rcseg/connectivity.hpp"
#include "rcseg/contour.hpp"
#include "rcseg/energy.hpp"
#include "rcseg/moves.hpp"
#include "rcseg/parallel.hpp"
#include "rcseg/raster.hpp"
#include "rcseg/region_stats.hpp"
#include "rcseg/sobolev.hpp"
#include "rcseg/topology.hpp"

namespace rcseg {

enum class GradientMode { L2, Sobolev };

enum class RunStatus { Converged, FallbackThenConverged, OscillationHalt, MaxIterations };

inline const char* to_string(GradientMode m) { return m == GradientMode::L2 ? "l2" : "sobolev"; }

inline const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Converged: return "converged";
    case RunStatus::FallbackThenConverged: return "fallback-then-converged";
    case RunStatus::OscillationHalt: return "oscillation-halt";
    case RunStatus::MaxIterations: return "max-iter";
  }
  return "unknown";
}

struct OptimizerConfig {
  GradientMode mode = GradientMode::L2;
  int max_iterations = 2000;
  std::size_t oscillation_window = 10;
  double oscillation_tolerance = 1e-6;
  /// Cap on accepted moves per iteration as a fraction of the particle count.
  double move_budget = 1.0;
  std::uint64_t seed = 0;
  bool allow_fusion = false;
  bool allow_vanish = true;
  /// Vanishing is admissible only in iterations after this one.
  int vanish_after = 0;
  int resync_interval = 10;

  void validate() const {
    if (max_iterations < 1) throw std::invalid_argument("OptimizerConfig: max iterations < 1");
    if (oscillation_window < 2) throw std::invalid_argument("OptimizerConfig: window < 2");
    if (!(move_budget > 0.0 && move_budget <= 1.0))
      throw std::invalid_argument("OptimizerConfig: move budget must be in (0, 1]");
    if (resync_interval < 1) throw std::invalid_argument("OptimizerConfig: resync interval < 1");
  }
};

struct IterationRecord {
  int iteration = 0;
  double energy = 0.0;
  std::size_t accepted = 0;
  std::size_t particles = 0;
  GradientMode mode = GradientMode::L2;
  double seconds = 0.0;
};

struct RunTrace {
  std::vector<IterationRecord> iterations;
};

struct RunResult {
  LabelImage labels;
  RunTrace trace;
  RunStatus status = RunStatus::Converged;
  int iterations = 0;
  double seconds = 0.0;
  double final_energy = 0.0;
  std::size_t region_count = 0;
  /// Largest |incremental - from-scratch| energy seen at resynchronization.
  double max_energy_drift = 0.0;
};

namespace detail {

inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Seeded tie-break key of a candidate move.
inline std::uint64_t tie_break(std::uint64_t seed, const ParticleKey& k) {
  return detail::mix64(seed ^ detail::mix64(static_cast<std::uint64_t>(k.pixel)) ^
                       detail::mix64(0xA5A5A5A5ull + k.competitor));
}

/// Execution order: ascending delta, then seeded hash, then key. The order
/// depends only on the particles' contents, never on their storage order.
inline std::vector<std::size_t> rank_candidates(std::span<const Particle> particles,
                                                std::uint64_t seed) {
  std::vector<std::uint64_t> h(particles.size());
  for (std::size_t i = 0; i < particles.size(); ++i) h[i] = tie_break(seed, particles[i].key());
  std::vector<std::size_t> order(particles.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const Particle& pa = particles[a];
    const Particle& pb = particles[b];
    if (pa.delta != pb.delta) return pa.delta < pb.delta;
    if (h[a] != h[b]) return h[a] < h[b];
    return pa.key() < pb.key();
  });
  return order;
}

/// Region Competition descent over a label raster.
class Segmenter {
 public:
  using Observer = std::function<void(const Segmenter&, const IterationRecord&)>;

  Segmenter(const Image& image, LabelImage init, const EnergyConfig& energy,
            const SobolevParams& sobolev, const OptimizerConfig& config,
            const Connectivity& conn)
      : image_(&image),
        labels_(std::move(init)),
        conn_(conn),
        stats_(StatsTable::compute(labels_, image)),
        contour_(labels_.shape(), conn),
        energy_(image, energy),
        topology_(labels_.shape(), conn),
        sobolev_(sobolev),
        config_(config),
        mode_(config.mode) {
    if (!(labels_.shape() == image.shape()))
      throw std::invalid_argument("Segmenter: label and image extents differ");
    if (conn.dim != labels_.dim())
      throw std::invalid_argument("Segmenter: connectivity dimension mismatch");
    sobolev_.validate();
    config_.validate();
    contour_.rescan(labels_);
    energy_.bind(labels_);
    energy_value_ = evaluate_total(labels_, image, energy).total;
    moved_.assign(static_cast<std::size_t>(labels_.size()), 0);
  }

  const LabelImage& labels() const { return labels_; }
  const ContourState& contour() const { return contour_; }
  const StatsTable& stats() const { return stats_; }
  const Image& image() const { return *image_; }
  const EnergyConfig& energy_config() const { return energy_.config(); }
  const Connectivity& connectivity() const { return conn_; }
  GradientMode mode() const { return mode_; }
  int iteration() const { return iteration_; }
  /// Incrementally tracked total energy.
  double energy() const { return energy_value_; }
  double max_energy_drift() const { return max_drift_; }
  /// Particles of the last iteration with their ranking deltas.
  const std::vector<Particle>& last_particles() const { return last_particles_; }

  void set_mode(GradientMode m) { mode_ = m; }
  void set_observer(Observer obs) { observer_ = std::move(obs); }

  /// Candidate deltas for the current state: raw or Sobolev-filtered data
  /// term plus the unfiltered lambda-weighted length term.
  std::vector<Particle> score_particles(GradientMode mode) const {
    std::vector<Particle> ps = contour_.particles();
    const std::size_t n = ps.size();
    std::vector<double> ext(n), internal(n);
    parallel_for(n, [&](std::size_t i) {
      const Particle& p = ps[i];
      ext[i] = energy_.delta_external(labels_, stats_, p.pixel, p.owner, p.competitor);
      internal[i] = delta_internal(labels_, p.pixel, p.competitor);
    });
    const double lambda = energy_.config().lambda;
    if (mode == GradientMode::Sobolev) {
      std::vector<FilterItem> items(n);
      for (std::size_t i = 0; i < n; ++i)
        items[i] = {labels_.shape().coord(ps[i].pixel), ps[i].owner, ps[i].competitor, ext[i]};
      const CellList cells = build_cell_list(items, labels_.dim(), sobolev_);
      const std::vector<double> filtered = sobolev_filter(items, sobolev_, cells);
      for (std::size_t i = 0; i < n; ++i) ps[i].delta = filtered[i] + lambda * internal[i];
    } else {
      for (std::size_t i = 0; i < n; ++i) ps[i].delta = ext[i] + lambda * internal[i];
    }
    return ps;
  }

  IterationRecord iterate() {
    const auto t0 = std::chrono::steady_clock::now();
    ++iteration_;
    last_particles_ = score_particles(mode_);
    const auto order = rank_candidates(last_particles_, config_.seed);

    const std::size_t budget = static_cast<std::size_t>(
        std::ceil(config_.move_budget * static_cast<double>(last_particles_.size())));
    const MoveRules rules{config_.allow_fusion,
                          config_.allow_vanish && iteration_ > config_.vanish_after};
    std::size_t accepted = 0;
    bool fused = false;
    std::vector<Index> touched;
    for (std::size_t idx : order) {
      const Particle& p = last_particles_[idx];
      if (!(p.delta < 0.0) || accepted >= budget) break;
      if (moved_[p.pixel]) continue;
      if (!topology_.admissible(labels_, p, rules)) continue;
      const double exact = energy_.delta_total(labels_, stats_, p.pixel, p.owner, p.competitor);
      if (mode_ == GradientMode::L2 && !(exact < 0.0)) continue;
      energy_.commit(labels_, p.pixel, p.owner, p.competitor);
      const MoveResult r =
          apply_move(labels_, contour_, stats_, *image_, p, topology_, config_.allow_fusion);
      if (!r.absorbed.empty()) {
        fused = true;
        energy_.bind(labels_);
      }
      energy_value_ += exact;
      moved_[p.pixel] = 1;
      touched.push_back(p.pixel);
      ++accepted;
    }
    for (Index i : touched) moved_[i] = 0;
    if (fused || iteration_ % config_.resync_interval == 0) resync();

    IterationRecord rec;
    rec.iteration = iteration_;
    rec.energy = energy_value_;
    rec.accepted = accepted;
    rec.particles = last_particles_.size();
    rec.mode = mode_;
    rec.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (observer_) observer_(*this, rec);
    return rec;
  }

  /// Iterates until no move is accepted, with a one-way switch from Sobolev
  /// to L2 when the Sobolev flow oscillates.
  RunResult run() {
    const auto t0 = std::chrono::steady_clock::now();
    RunResult result;
    result.status = RunStatus::MaxIterations;
    bool fell_back = false;
    std::vector<double> energies;
    std::vector<std::size_t> moves;
    LabelImage previous;
    double previous_energy = 0.0;

    while (iteration_ < config_.max_iterations) {
      if (mode_ == GradientMode::L2) {
        previous = labels_;
        previous_energy = energy_value_;
      }
      const IterationRecord rec = iterate();
      result.trace.iterations.push_back(rec);
      if (rec.accepted == 0) {
        result.status = fell_back ? RunStatus::FallbackThenConverged : RunStatus::Converged;
        break;
      }
      energies.push_back(rec.energy);
      moves.push_back(rec.accepted);
      if (!detect_oscillation(energies, moves, config_.oscillation_window,
                              config_.oscillation_tolerance))
        continue;
      if (mode_ == GradientMode::Sobolev) {
        mode_ = GradientMode::L2;
        fell_back = true;
        energies.clear();
        moves.clear();
        continue;
      }
      if (previous_energy < energy_value_) reset_labels(std::move(previous));
      result.status = RunStatus::OscillationHalt;
      break;
    }
    resync();
    result.labels = labels_;
    result.iterations = iteration_;
    result.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.final_energy = energy_value_;
    result.region_count = stats_.foreground_count();
    result.max_energy_drift = max_drift_;
    return result;
  }

 private:
  void resync() {
    const double exact = evaluate_total(labels_, *image_, energy_.config()).total;
    max_drift_ = std::max(max_drift_, std::abs(exact - energy_value_));
    energy_value_ = exact;
  }

  void reset_labels(LabelImage labels) {
    labels_ = std::move(labels);
    stats_ = StatsTable::compute(labels_, *image_);
    contour_.rescan(labels_);
    energy_.bind(labels_);
    energy_value_ = evaluate_total(labels_, *image_, energy_.config()).total;
  }

  const Image* image_;
  LabelImage labels_;
  Connectivity conn_;
  StatsTable stats_;
  ContourState contour_;
  EnergyModel energy_;
  TopologyChecker topology_;
  SobolevParams sobolev_;
  OptimizerConfig config_;
  GradientMode mode_;
  int iteration_ = 0;
  double energy_value_ = 0.0;
  double max_drift_ = 0.0;
  std::vector<char> moved_;
  std::vector<Particle> last_particles_;
  Observer observer_;
};

inline RunResult run(const Image& image, LabelImage init, const EnergyConfig& energy,
                     const SobolevParams& sobolev, const OptimizerConfig& config,
                     const Connectivity& conn) {
  Segmenter s(image, std::move(init), energy, sobolev, config, conn);
  return s.run();
}

}  // namespace rcseg
