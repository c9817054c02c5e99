#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "rcseg/connectivity.hpp"
#include "rcseg/energy.hpp"
#include "rcseg/initialize.hpp"
#include "rcseg/io.hpp"
#include "rcseg/optimizer.hpp"
#include "rcseg/sobolev.hpp"
#include "rcseg/synth.hpp"

namespace rcseg {

inline constexpr const char* kArtifactVersion = "1.0.0";

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses a decimal or a "p/q" fraction.
inline double parse_real(const std::string& text) {
  const auto slash = text.find('/');
  auto one = [&](const std::string& s) {
    std::size_t used = 0;
    double v;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      throw UsageError("not a number: '" + text + "'");
    }
    if (used != s.size()) throw UsageError("not a number: '" + text + "'");
    return v;
  };
  if (slash == std::string::npos) return one(text);
  const double den = one(text.substr(slash + 1));
  if (den == 0.0) throw UsageError("zero denominator in '" + text + "'");
  return one(text.substr(0, slash)) / den;
}

struct InitScheme {
  enum class Kind { Rect, Bubbles, Otsu, Maxima, File };
  Kind kind = Kind::Rect;
  int count = 0;
  int radius = 0;
  double sigma = 0.0;
  std::string path;

  /// rect | bubbles:<n>:<r> | otsu | maxima:<sigma>:<r> | file:<path>
  static InitScheme parse(const std::string& text) {
    InitScheme s;
    auto fields = [&](std::size_t n) {
      std::vector<std::string> out;
      std::stringstream ss(text);
      std::string f;
      while (std::getline(ss, f, ':')) out.push_back(f);
      if (out.size() != n) throw UsageError("malformed --init value '" + text + "'");
      return out;
    };
    auto to_int = [&](const std::string& f) {
      int v = 0;
      const auto r = std::from_chars(f.data(), f.data() + f.size(), v);
      if (r.ec != std::errc{} || r.ptr != f.data() + f.size())
        throw UsageError("malformed --init value '" + text + "'");
      return v;
    };
    if (text == "rect") {
      s.kind = Kind::Rect;
    } else if (text == "otsu") {
      s.kind = Kind::Otsu;
    } else if (text.rfind("bubbles:", 0) == 0) {
      const auto f = fields(3);
      s.kind = Kind::Bubbles;
      s.count = to_int(f[1]);
      s.radius = to_int(f[2]);
      if (s.count < 1 || s.radius < 1) throw UsageError("bubbles needs n >= 1 and r >= 1");
    } else if (text.rfind("maxima:", 0) == 0) {
      const auto f = fields(3);
      s.kind = Kind::Maxima;
      s.sigma = parse_real(f[1]);
      s.radius = to_int(f[2]);
      if (s.sigma < 0.0 || s.radius < 1) throw UsageError("maxima needs sigma >= 0 and r >= 1");
    } else if (text.rfind("file:", 0) == 0) {
      s.kind = Kind::File;
      s.path = text.substr(5);
      if (s.path.empty()) throw UsageError("file init needs a path");
    } else {
      throw UsageError("unknown --init scheme '" + text + "'");
    }
    return s;
  }

  std::string to_string() const {
    std::ostringstream o;
    o << std::setprecision(17);
    switch (kind) {
      case Kind::Rect: return "rect";
      case Kind::Otsu: return "otsu";
      case Kind::Bubbles: o << "bubbles:" << count << ":" << radius; return o.str();
      case Kind::Maxima: o << "maxima:" << sigma << ":" << radius; return o.str();
      case Kind::File: return "file:" + path;
    }
    return "rect";
  }

  bool seeded() const { return kind == Kind::Bubbles || kind == Kind::Maxima; }
};

/// Seeded initializations may lose spurious seeds only after this iteration.
inline constexpr int kSeededVanishDelay = 5;

inline InitResult initialize(const InitScheme& scheme, const Image& image,
                             const Connectivity& conn) {
  switch (scheme.kind) {
    case InitScheme::Kind::Rect: return {rectangle_init(image.shape()), false};
    case InitScheme::Kind::Bubbles:
      return {bubble_grid(image.shape(), scheme.count, scheme.radius), false};
    case InitScheme::Kind::Otsu: return otsu_init(image, conn);
    case InitScheme::Kind::Maxima: return maxima_bubbles(image, scheme.sigma, scheme.radius);
    case InitScheme::Kind::File: {
      LabelImage l = read_labels(scheme.path);
      if (!(l.shape() == image.shape()))
        throw IoError("initial label file extents differ from the image");
      return {std::move(l), false};
    }
  }
  throw std::logic_error("unreachable init scheme");
}

/// Everything needed to run one segmentation, and nothing that depends on
/// wall time.
struct SegmentJob {
  std::string input;
  /// When set, the input image is synthesized instead of read.
  std::optional<SynthSpec> synth;
  std::string output;
  EnergyConfig energy;
  SobolevParams sobolev;
  OptimizerConfig optimizer;
  InitScheme init;
  Adjacency foreground = Adjacency::Full;
  std::string report;
  std::string trace;
  std::string particles_csv;
};

inline const char* to_string(RegionModel m) {
  return m == RegionModel::PiecewiseConstant ? "pc" : "ps";
}
inline const char* to_string(NoiseModel m) {
  return m == NoiseModel::Gaussian ? "gauss" : "poisson";
}

inline RegionModel parse_region_model(const std::string& s) {
  if (s == "pc") return RegionModel::PiecewiseConstant;
  if (s == "ps") return RegionModel::PiecewiseSmooth;
  throw UsageError("unknown model '" + s + "'");
}
inline NoiseModel parse_noise_model(const std::string& s) {
  if (s == "gauss") return NoiseModel::Gaussian;
  if (s == "poisson") return NoiseModel::Poisson;
  throw UsageError("unknown noise model '" + s + "'");
}
inline GradientMode parse_gradient_mode(const std::string& s) {
  if (s == "l2") return GradientMode::L2;
  if (s == "sobolev") return GradientMode::Sobolev;
  throw UsageError("unknown gradient '" + s + "'");
}

inline nlohmann::json to_json(const EnergyConfig& c) {
  return {{"model", to_string(c.region)},
          {"noise", to_string(c.noise)},
          {"lambda", c.lambda},
          {"smooth_radius", c.smooth_radius}};
}

inline EnergyConfig energy_config_from_json(const nlohmann::json& j) {
  EnergyConfig c;
  c.region = parse_region_model(j.at("model").get<std::string>());
  c.noise = parse_noise_model(j.at("noise").get<std::string>());
  c.lambda = j.at("lambda").get<double>();
  c.smooth_radius = j.at("smooth_radius").get<int>();
  c.validate();
  return c;
}

inline nlohmann::json to_json(const SobolevParams& p) {
  return {{"E", p.length_scale}, {"epsilon", p.epsilon}};
}

inline SobolevParams sobolev_params_from_json(const nlohmann::json& j) {
  SobolevParams p;
  p.length_scale = j.at("E").get<double>();
  p.epsilon = j.at("epsilon").get<double>();
  p.validate();
  return p;
}

inline nlohmann::json to_json(const OptimizerConfig& c) {
  return {{"gradient", to_string(c.mode)},
          {"max_iterations", c.max_iterations},
          {"oscillation_window", c.oscillation_window},
          {"oscillation_tolerance", c.oscillation_tolerance},
          {"move_budget", c.move_budget},
          {"seed", c.seed},
          {"allow_fusion", c.allow_fusion},
          {"allow_vanish", c.allow_vanish},
          {"vanish_after", c.vanish_after},
          {"resync_interval", c.resync_interval}};
}

inline OptimizerConfig optimizer_config_from_json(const nlohmann::json& j) {
  OptimizerConfig c;
  c.mode = parse_gradient_mode(j.at("gradient").get<std::string>());
  c.max_iterations = j.at("max_iterations").get<int>();
  c.oscillation_window = j.at("oscillation_window").get<std::size_t>();
  c.oscillation_tolerance = j.at("oscillation_tolerance").get<double>();
  c.move_budget = j.at("move_budget").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.allow_fusion = j.at("allow_fusion").get<bool>();
  c.allow_vanish = j.at("allow_vanish").get<bool>();
  c.vanish_after = j.at("vanish_after").get<int>();
  c.resync_interval = j.at("resync_interval").get<int>();
  c.validate();
  return c;
}

inline nlohmann::json to_json(const SegmentJob& job) {
  return {{"input", job.input},
          {"synth", job.synth ? synth_spec_to_json(*job.synth) : nlohmann::json(nullptr)},
          {"output", job.output},
          {"energy", to_json(job.energy)},
          {"sobolev", to_json(job.sobolev)},
          {"optimizer", to_json(job.optimizer)},
          {"init", job.init.to_string()},
          {"foreground_adjacency", job.foreground == Adjacency::Full ? "full" : "face"},
          {"report", job.report},
          {"trace", job.trace},
          {"particles_csv", job.particles_csv}};
}

inline SegmentJob segment_job_from_json(const nlohmann::json& j) {
  SegmentJob job;
  job.input = j.at("input").get<std::string>();
  if (j.contains("synth") && !j.at("synth").is_null())
    job.synth = synth_spec_from_json(j.at("synth"));
  job.output = j.at("output").get<std::string>();
  job.energy = energy_config_from_json(j.at("energy"));
  job.sobolev = sobolev_params_from_json(j.at("sobolev"));
  job.optimizer = optimizer_config_from_json(j.at("optimizer"));
  job.init = InitScheme::parse(j.at("init").get<std::string>());
  const std::string adj = j.value("foreground_adjacency", std::string("full"));
  if (adj != "full" && adj != "face") throw UsageError("unknown adjacency '" + adj + "'");
  job.foreground = adj == "full" ? Adjacency::Full : Adjacency::Face;
  job.report = j.value("report", std::string());
  job.trace = j.value("trace", std::string());
  job.particles_csv = j.value("particles_csv", std::string());
  return job;
}

inline nlohmann::json to_json(const IterationRecord& r) {
  return {{"iteration", r.iteration},
          {"energy", r.energy},
          {"accepted", r.accepted},
          {"particles", r.particles},
          {"mode", to_string(r.mode)},
          {"seconds", r.seconds}};
}

/// Exit status of the segment command for a run status.
inline int exit_code(RunStatus s) {
  switch (s) {
    case RunStatus::Converged:
    case RunStatus::FallbackThenConverged: return 0;
    case RunStatus::MaxIterations: return 2;
    case RunStatus::OscillationHalt: return 3;
  }
  return 1;
}

struct RunReport {
  nlohmann::json config;
  RunStatus status = RunStatus::Converged;
  int iterations = 0;
  double wall_seconds = 0.0;
  double final_energy = 0.0;
  std::size_t region_count = 0;
  bool init_degenerate = false;

  std::string config_field(const char* key) const {
    return config.is_object() ? config.value(key, std::string()) : std::string();
  }

  double seconds_per_iteration() const {
    return iterations > 0 ? wall_seconds / iterations : 0.0;
  }

  nlohmann::json to_json() const {
    return {{"artifact_version", kArtifactVersion},
            {"config", config},
            {"status", rcseg::to_string(status)},
            {"iterations", iterations},
            {"wall_seconds", wall_seconds},
            {"seconds_per_iteration", seconds_per_iteration()},
            {"final_energy", final_energy},
            {"region_count", region_count},
            {"init_degenerate", init_degenerate},
            {"input", config_field("input")},
            {"output", config_field("output")}};
  }
};

/// Line-at-a-time text sink. Lines go to "<path>.partial" as they are
/// produced and the file is renamed to `path` on commit().
class StreamedArtifact {
 public:
  StreamedArtifact() = default;
  explicit StreamedArtifact(const std::string& path) : path_(path) {
    if (path_.empty()) return;
    out_.open(partial(), std::ios::binary | std::ios::trunc);
    if (!out_) throw IoError("cannot write " + partial());
  }

  bool active() const { return !path_.empty(); }

  void line(const std::string& text) {
    if (!active()) return;
    out_ << text << '\n';
    out_.flush();
  }

  void commit() {
    if (!active()) return;
    out_.close();
    std::error_code ec;
    std::filesystem::rename(partial(), path_, ec);
    if (ec) throw IoError("cannot rename into " + path_);
  }

 private:
  std::string partial() const { return path_ + ".partial"; }
  std::string path_;
  std::ofstream out_;
};

inline std::string format_real(double v) {
  std::ostringstream o;
  o << std::setprecision(17) << v;
  return o.str();
}

inline std::string particle_csv_header(int dim) {
  return dim == 2 ? "iteration,x,y,owner,competitor,delta"
                  : "iteration,x,y,z,owner,competitor,delta";
}

inline std::string particle_csv_row(int iteration, const Shape& shape, const Particle& p) {
  const Coord c = shape.coord(p.pixel);
  std::ostringstream o;
  o << iteration << ',' << c[0] << ',' << c[1];
  if (shape.dim() == 3) o << ',' << c[2];
  o << ',' << p.owner << ',' << p.competitor << ',' << format_real(p.delta);
  return o.str();
}

/// Table of K(r) over [-E/2, E/2]; the end rows sit exactly at the cutoff.
inline std::string kernel_table_csv(const SobolevParams& params, double step = 0.25) {
  params.validate();
  if (!(step > 0.0)) throw std::invalid_argument("kernel table step must be > 0");
  const double half = params.cutoff();
  const long n = std::max(1L, std::lround(2.0 * half / step));
  std::string out = "r,kernel\n";
  for (long k = 0; k <= n; ++k) {
    double r = -half + 2.0 * half * static_cast<double>(k) / static_cast<double>(n);
    if (k == n) r = half;
    out += format_real(r) + "," + format_real(kernel_eval(r, params)) + "\n";
  }
  return out;
}

struct JobOutcome {
  RunResult result;
  RunReport report;
};

inline Image load_job_image(const SegmentJob& job) {
  if (job.synth) return synthesize(*job.synth).noisy;
  if (job.input.empty()) throw UsageError("no input image given");
  return read_image(job.input);
}

/// Runs a job end to end and writes every requested artifact.
inline JobOutcome execute(const SegmentJob& job) {
  const Image image = load_job_image(job);
  const Connectivity conn{image.dim(), job.foreground};
  InitResult init = initialize(job.init, image, conn);

  OptimizerConfig opt = job.optimizer;
  Segmenter seg(image, std::move(init.labels), job.energy, job.sobolev, opt, conn);

  StreamedArtifact trace(job.trace);
  StreamedArtifact particles(job.particles_csv);
  particles.line(particle_csv_header(image.dim()));
  seg.set_observer([&](const Segmenter& s, const IterationRecord& rec) {
    trace.line(to_json(rec).dump());
    if (particles.active())
      for (const Particle& p : s.last_particles())
        particles.line(particle_csv_row(rec.iteration, image.shape(), p));
  });

  JobOutcome out;
  out.result = seg.run();
  trace.commit();
  particles.commit();
  if (!job.output.empty()) write_labels(out.result.labels, job.output);

  out.report.config = to_json(job);
  out.report.status = out.result.status;
  out.report.iterations = out.result.iterations;
  out.report.wall_seconds = out.result.seconds;
  out.report.final_energy = out.result.final_energy;
  out.report.region_count = out.result.region_count;
  out.report.init_degenerate = init.degenerate;
  if (!job.report.empty()) write_atomic(job.report, out.report.to_json().dump(2) + "\n");
  return out;
}

}  // namespace rcseg
