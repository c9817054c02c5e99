#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>

#include "rcseg/rcseg.hpp"

namespace {

using namespace rcseg;

struct SegmentFlags {
  std::string input, output, model = "pc", noise = "gauss", gradient = "l2";
  std::string synth_spec;
  double lambda = 0.0;
  double E = 12.0;
  std::string epsilon = "0.0416666666666667";
  int smooth_radius = 8;
  std::string init = "rect";
  int max_iter = 2000;
  std::uint64_t seed = 0;
  bool allow_fusion = false;
  std::string adjacency = "full";
  std::string report, trace, particles_csv;
  std::string replay;
};

void add_segment_flags(CLI::App* cmd, SegmentFlags& f) {
  cmd->add_option("--input", f.input, "Input image (PGM or NRRD)");
  cmd->add_option("--synth", f.synth_spec, "Synthesize the input from a scene spec JSON");
  cmd->add_option("--output", f.output, "Output label image");
  cmd->add_option("--model", f.model, "Region model")->check(CLI::IsMember({"pc", "ps"}));
  cmd->add_option("--noise", f.noise, "Noise model")
      ->check(CLI::IsMember({"gauss", "poisson"}));
  cmd->add_option("--gradient", f.gradient, "Gradient flow")
      ->check(CLI::IsMember({"l2", "sobolev"}));
  cmd->add_option("--lambda", f.lambda, "Length prior weight");
  cmd->add_option("--E", f.E, "Sobolev length scale in pixels");
  cmd->add_option("--epsilon", f.epsilon, "Sobolev smoothness (decimal or p/q)");
  cmd->add_option("--smooth-radius", f.smooth_radius, "Ball radius for local means");
  cmd->add_option("--init", f.init,
                  "rect | bubbles:<n>:<r> | otsu | maxima:<sigma>:<r> | file:<path>");
  cmd->add_option("--max-iter", f.max_iter, "Iteration limit");
  cmd->add_option("--seed", f.seed, "Tie-break seed");
  cmd->add_flag("--allow-fusion", f.allow_fusion, "Merge regions that come into contact");
  cmd->add_option("--adjacency", f.adjacency, "Foreground adjacency")
      ->check(CLI::IsMember({"full", "face"}));
  cmd->add_option("--report", f.report, "Summary report JSON");
  cmd->add_option("--trace", f.trace, "Per-iteration trace (JSON lines)");
  cmd->add_option("--particles-csv", f.particles_csv, "Per-iteration particle dump");
}

nlohmann::json load_json(const std::string& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw IoError("cannot parse " + path + ": " + e.what());
  }
}

SegmentJob job_from_flags(const SegmentFlags& f) {
  SegmentJob job;
  job.input = f.input;
  if (!f.synth_spec.empty()) job.synth = synth_spec_from_json(load_json(f.synth_spec));
  if (job.input.empty() && !job.synth) throw UsageError("segment needs --input or --synth");
  job.output = f.output;
  job.energy.region = parse_region_model(f.model);
  job.energy.noise = parse_noise_model(f.noise);
  job.energy.lambda = f.lambda;
  job.energy.smooth_radius = f.smooth_radius;
  job.energy.validate();
  job.sobolev.length_scale = f.E;
  job.sobolev.epsilon = parse_real(f.epsilon);
  job.sobolev.validate();
  job.init = InitScheme::parse(f.init);
  job.optimizer.mode = parse_gradient_mode(f.gradient);
  job.optimizer.max_iterations = f.max_iter;
  job.optimizer.seed = f.seed;
  job.optimizer.allow_fusion = f.allow_fusion;
  job.optimizer.vanish_after = job.init.seeded() ? kSeededVanishDelay : 0;
  job.optimizer.validate();
  job.foreground = f.adjacency == "full" ? Adjacency::Full : Adjacency::Face;
  job.report = f.report;
  job.trace = f.trace;
  job.particles_csv = f.particles_csv;
  return job;
}

int run_segment(const SegmentFlags& f) {
  SegmentJob job;
  if (!f.replay.empty()) {
    job = segment_job_from_json(load_json(f.replay).at("config"));
    if (!f.output.empty()) job.output = f.output;
    if (!f.report.empty()) job.report = f.report;
    if (!f.trace.empty()) job.trace = f.trace;
    if (!f.particles_csv.empty()) job.particles_csv = f.particles_csv;
  } else {
    job = job_from_flags(f);
  }
  const JobOutcome out = execute(job);
  if (out.report.init_degenerate)
    std::cerr << "warning: initialization produced an empty foreground\n";
  std::cerr << to_string(out.result.status) << " after " << out.result.iterations
            << " iterations, energy " << format_real(out.result.final_energy) << ", "
            << out.result.region_count << " regions\n";
  return exit_code(out.result.status);
}

int run_compare(const SegmentFlags& f, const std::string& out_l2, const std::string& out_sob) {
  SegmentJob base = job_from_flags(f);
  base.report.clear();
  base.trace.clear();
  base.particles_csv.clear();
  nlohmann::json side;
  double energy[2] = {0, 0};
  double spi[2] = {0, 0};
  int iters[2] = {0, 0};
  int worst = 0;
  for (int m = 0; m < 2; ++m) {
    SegmentJob job = base;
    job.optimizer.mode = m == 0 ? GradientMode::L2 : GradientMode::Sobolev;
    job.output = m == 0 ? out_l2 : out_sob;
    const JobOutcome out = execute(job);
    side[to_string(job.optimizer.mode)] = out.report.to_json();
    energy[m] = out.result.final_energy;
    spi[m] = out.report.seconds_per_iteration();
    iters[m] = out.result.iterations;
    worst = std::max(worst, exit_code(out.result.status));
  }
  side["final_energy_relative_difference"] =
      std::abs(energy[1] - energy[0]) / std::max(std::abs(energy[0]), 1e-300);
  side["iteration_ratio"] = static_cast<double>(iters[1]) / std::max(iters[0], 1);
  side["seconds_per_iteration_ratio"] = spi[0] > 0 ? spi[1] / spi[0] : 0.0;
  const std::string text = side.dump(2) + "\n";
  if (f.report.empty())
    std::cout << text;
  else
    write_atomic(f.report, text);
  return worst;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Region Competition segmentation with L2 and Sobolev gradient flows"};
  app.require_subcommand(1);

  SegmentFlags seg;
  auto* segment = app.add_subcommand("segment", "Segment an image");
  add_segment_flags(segment, seg);
  segment->add_option("--replay", seg.replay, "Re-run the job echoed in a report JSON");

  SegmentFlags cmp;
  std::string cmp_l2, cmp_sob;
  auto* compare = app.add_subcommand("compare", "Run both gradient flows on the same inputs");
  add_segment_flags(compare, cmp);
  compare->add_option("--output-l2", cmp_l2, "Label output of the L2 run");
  compare->add_option("--output-sobolev", cmp_sob, "Label output of the Sobolev run");

  std::string spec_path, out_image, out_truth, out_clean, format;
  auto* synth = app.add_subcommand("synth", "Render a synthetic noisy image");
  synth->add_option("--spec", spec_path, "Scene spec JSON")->required();
  synth->add_option("--out-image", out_image, "Noisy image output")->required();
  synth->add_option("--out-truth", out_truth, "Ground-truth labels output");
  synth->add_option("--out-clean", out_clean, "Blurred noise-free image output");
  synth->add_option("--format", format, "Image format")->check(CLI::IsMember({"pgm", "nrrd"}));

  double kt_E = 12.0, kt_step = 0.25;
  std::string kt_eps = "0.0416666666666667", kt_out;
  auto* ktable = app.add_subcommand("kernel-table", "Tabulate the Sobolev kernel as CSV");
  ktable->add_option("--E", kt_E, "Length scale");
  ktable->add_option("--epsilon", kt_eps, "Smoothness (decimal or p/q)");
  ktable->add_option("--step", kt_step, "Sampling step in pixels");
  ktable->add_option("--out", kt_out, "CSV output (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 1;
  }

  try {
    if (*segment) return run_segment(seg);
    if (*compare) return run_compare(cmp, cmp_l2, cmp_sob);
    if (*synth) {
      const SynthSpec spec = synth_spec_from_json(load_json(spec_path));
      const SynthResult r = synthesize(spec);
      const bool pgm = format.empty() ? r.noisy.dim() == 2 : format == "pgm";
      const ImageFormat fmt = pgm ? ImageFormat::Pgm : ImageFormat::FloatNrrd;
      write_image(r.noisy, out_image, fmt);
      if (!out_clean.empty()) write_image(r.blurred, out_clean, ImageFormat::FloatNrrd);
      if (!out_truth.empty()) write_labels(r.truth, out_truth);
      return 0;
    }
    if (*ktable) {
      SobolevParams p{kt_E, parse_real(kt_eps)};
      const std::string csv = kernel_table_csv(p, kt_step);
      if (kt_out.empty())
        std::cout << csv;
      else
        write_atomic(kt_out, csv);
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n" << app.help();
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
