// jumpdesign command line: synthetic truths, single designs, benchmarks,
// transect profiles and metric summaries.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "jumpdesign/design.hpp"
#include "jumpdesign/evaluation.hpp"
#include "jumpdesign/harness.hpp"
#include "jumpdesign/image_io.hpp"
#include "jumpdesign/sampler.hpp"
#include "jumpdesign/smoother.hpp"
#include "jumpdesign/synthetic.hpp"

namespace fs = std::filesystem;
using namespace jumpdesign;

namespace {

struct InputOptions {
  std::string preset;
  std::vector<std::size_t> grid;
  std::string spec;
  std::string image;
  std::string mask;

  void add_to(CLI::App* app, const std::string& default_preset) {
    preset = default_preset;
    app->add_option("--preset", preset, "built-in synthetic surface")->capture_default_str();
    app->add_option("--grid", grid, "grid size W H for the preset")->expected(2);
    app->add_option("--spec", spec, "synthetic spec file");
    app->add_option("--image", image, "PGM or CSV image used as ground truth");
    app->add_option("--mask", mask, "jump mask PGM for --image");
  }

  void apply(ExperimentConfig& c) const {
    c.preset = preset;
    if (grid.size() == 2) c.preset_grid = GridShape{grid[0], grid[1]};
    c.spec_path = spec;
    c.image_path = image;
    c.mask_path = mask;
    if (!spec.empty() || !image.empty()) c.preset.clear();
  }
};

struct SmootherOptions {
  std::optional<std::size_t> k;
  double k_log_factor = 3.0;
  std::string kernel = "epanechnikov";
  std::optional<double> kde_bandwidth;

  void add_to(CLI::App* app) {
    app->add_option("--k", k, "fixed neighbour count (default max(p+2, ceil(3 ln n)))");
    app->add_option("--k-log-factor", k_log_factor, "multiplier of ln n in the default k")->capture_default_str();
    app->add_option("--kernel", kernel, "epanechnikov, triweight or uniform")->capture_default_str();
    app->add_option("--kde-bandwidth", kde_bandwidth, "fixed KDE bandwidth (default rule of thumb)");
  }

  void apply(ExperimentConfig& c) const {
    c.k = k;
    c.k_log_factor = k_log_factor;
    c.kernel = parse_kernel_family(kernel);
    if (kde_bandwidth) {
      c.kde_rule = KdeBandwidthRule::Fixed;
      c.kde_bandwidth = *kde_bandwidth;
    }
  }
};

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

int cmd_synth(const InputOptions& in, const std::string& out_dir) {
  ExperimentConfig c;
  in.apply(c);
  c.validate();
  const GroundTruth truth = load_truth(c);
  fs::create_directories(out_dir);
  const Image img = truth.render();
  write_pgm(fs::path(out_dir) / "truth.pgm", img);
  write_csv_grid(fs::path(out_dir) / "truth.csv", img);
  write_mask_pgm(fs::path(out_dir) / "mask.pgm", truth.jump_mask);
  if (!c.preset.empty()) {
    auto spec = open_out(fs::path(out_dir) / "spec.txt");
    spec << format_synthetic_spec(synthetic_preset(c.preset, c.preset_grid));
  }
  std::cout << "wrote " << img.shape.width << "x" << img.shape.height << " truth to " << out_dir << "\n";
  return 0;
}

int cmd_design(const InputOptions& in, const SmootherOptions& sm, const std::string& sampler, double budget,
               std::size_t stages, double sigma, std::uint64_t seed, double jb_h, const std::string& out_dir) {
  ExperimentConfig c;
  in.apply(c);
  sm.apply(c);
  c.budget_fraction = budget;
  c.n_stages = stages;
  c.sigmas = {sigma};
  c.jump_band_h = jb_h;
  c.validate();
  const GroundTruth truth = load_truth(c);

  DesignConfig dc;
  dc.sampler = c.sampler(parse_strategy(sampler));
  dc.smoother = c.smoother();
  dc.budget_fraction = budget;
  dc.n_stages = stages;
  dc.sigma = sigma;
  dc.seed = seed;
  const DesignResult design = run_sequential_design(truth, dc);
  for (const auto& w : design.warnings) std::cerr << "warning: " << w << "\n";

  fs::create_directories(out_dir);
  {
    auto pts = open_out(fs::path(out_dir) / "points.csv");
    pts << "x,y,value,stage\n";
    std::size_t i = 0;
    for (const auto& st : design.stages) {
      for (std::size_t j = 0; j < st.drawn; ++j, ++i) {
        const auto xy = design.data.coords(i);
        pts << format_double(xy[0]) << ',' << format_double(xy[1]) << ',' << format_double(design.data.value(i))
            << ',' << st.stage << '\n';
      }
    }
  }
  const EstimateField field = estimate_unsampled(design.data, design.sampled, dc.smoother);
  const Image recon = reconstruct_image(field, design.data, *truth.grid);
  write_csv_grid(fs::path(out_dir) / "field.csv", recon);
  write_pgm(fs::path(out_dir) / "field.pgm", recon);

  MetricsReport r = compute_mse(field, truth, jump_band(truth.jump_mask, jb_h), design.sampled);
  r.sigma = sigma;
  r.sampler = sampler;
  r.stage = stages;
  {
    auto m = open_out(fs::path(out_dir) / "metrics.csv");
    write_metrics_header(m);
    write_metrics_row(m, r);
  }
  std::cout << "sampled " << design.data.size() << " of " << truth.grid->size() << " pixels; j_mse="
            << (r.j_mse ? format_double(*r.j_mse) : "NA") << " c_mse=" << (r.c_mse ? format_double(*r.c_mse) : "NA")
            << "\n";
  return 0;
}

int cmd_profile(const InputOptions& in, const SmootherOptions& sm, double sigma, std::uint64_t seed,
                std::size_t stride, double fraction, std::optional<std::size_t> row, const std::string& out_path) {
  ExperimentConfig c;
  in.apply(c);
  sm.apply(c);
  c.sigmas = {sigma};
  c.validate();
  const GroundTruth truth = load_truth(c);
  const GridShape g = *truth.grid;

  DesignConfig dc;
  dc.sampler = c.sampler(Strategy::Uniform);
  dc.smoother = c.smoother();
  dc.sigma = sigma;
  dc.seed = seed;
  Dataset data(2, truth.bounds);
  if (fraction > 0.0) {
    dc.budget_fraction = fraction;
    dc.n_stages = 1;
    data = run_sequential_design(truth, dc).data;
  } else {
    if (stride == 0) throw std::invalid_argument("--stride must be positive");
    std::vector<DesignPoint> pts;
    for (std::size_t y = 0; y < g.height; y += stride) {
      for (std::size_t x = 0; x < g.width; x += stride) {
        pts.push_back({{static_cast<double>(x), static_cast<double>(y)}, pts.size()});
      }
    }
    data.insert_all(observe(truth, pts, sigma, seed));
  }

  std::vector<double> transect;
  if (row) {
    if (*row >= g.height) throw std::invalid_argument("--row outside the grid");
    for (std::size_t x = 0; x < g.width; ++x) {
      transect.push_back(static_cast<double>(x));
      transect.push_back(static_cast<double>(*row));
    }
  } else {
    transect = middle_row_transect(g);
  }
  const ProfileTable table = pmf_vs_error_profile(truth, data, transect, dc.smoother, dc.sampler);
  for (const auto& w : table.warnings) std::cerr << "warning: " << w << "\n";

  std::ofstream file;
  std::ostream* out = &std::cout;
  if (!out_path.empty() && out_path != "-") {
    file = open_out(out_path);
    out = &file;
  }
  *out << "x,y,error,proposed,wrms_c,wrms_j\n";
  for (const auto& r : table.rows) {
    *out << format_double(r.x) << ',' << format_double(r.y) << ',' << format_double(r.error) << ','
         << format_double(r.proposed) << ',' << format_double(r.wrms_c) << ',' << format_double(r.wrms_j) << '\n';
  }
  return 0;
}

int cmd_report(const std::vector<std::string>& inputs, double signal_range, const std::string& out_path) {
  std::vector<MetricsReport> rows;
  for (const auto& p : inputs) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + p);
    const auto part = read_metrics_csv(in);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  const auto summary = summarize(rows, signal_range);
  if (out_path.empty() || out_path == "-") {
    write_summary(std::cout, summary, signal_range);
  } else {
    auto out = open_out(out_path);
    write_summary(out, summary, signal_range);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequential adaptive sampling for jump-preserving surface reconstruction"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth", "write a synthetic ground truth and its jump mask");
  InputOptions synth_in;
  synth_in.add_to(synth, "step");
  std::string synth_out = "synth";
  synth->add_option("-o,--output", synth_out, "output directory")->capture_default_str();

  auto* design = app.add_subcommand("design", "run one sequential design and reconstruct the surface");
  InputOptions design_in;
  design_in.add_to(design, "disk");
  SmootherOptions design_sm;
  design_sm.add_to(design);
  std::string design_sampler = "proposed";
  double design_budget = 0.10;
  std::size_t design_stages = 6;
  double design_sigma = 0.1;
  std::uint64_t design_seed = 1;
  double design_jb = 6.0;
  std::string design_out = "design";
  design->add_option("--sampler", design_sampler, "proposed, uniform, wrms-c or wrms-j")->capture_default_str();
  design->add_option("--budget", design_budget, "fraction of pixels to sample")->capture_default_str();
  design->add_option("--stages", design_stages, "number of stages")->capture_default_str();
  design->add_option("--sigma", design_sigma, "noise standard deviation")->capture_default_str();
  design->add_option("--seed", design_seed, "random seed")->capture_default_str();
  design->add_option("--jb-h", design_jb, "jump band radius in pixels")->capture_default_str();
  design->add_option("-o,--output", design_out, "output directory")->capture_default_str();

  auto* bench = app.add_subcommand("bench", "run a full sampler comparison");
  std::string bench_config;
  InputOptions bench_in;
  bench_in.add_to(bench, "");
  std::vector<double> bench_sigmas;
  std::vector<std::string> bench_samplers;
  std::optional<std::size_t> bench_reps, bench_stages;
  std::optional<double> bench_budget;
  std::optional<std::uint64_t> bench_seed;
  std::string bench_out;
  bool bench_quiet = false;
  bench->add_option("-c,--config", bench_config, "experiment config (key = value lines)");
  bench->add_option("--sigmas", bench_sigmas, "noise levels")->delimiter(',');
  bench->add_option("--samplers", bench_samplers, "samplers to compare")->delimiter(',');
  bench->add_option("--replications", bench_reps, "replications per cell");
  bench->add_option("--stages", bench_stages, "number of stages");
  bench->add_option("--budget", bench_budget, "fraction of pixels to sample");
  bench->add_option("--seed", bench_seed, "master seed");
  bench->add_option("-o,--output", bench_out, "output directory");
  bench->add_flag("-q,--quiet", bench_quiet, "no per-cell progress");

  auto* profile = app.add_subcommand("profile", "error and sampling criteria along a transect");
  InputOptions prof_in;
  prof_in.add_to(profile, "step");
  SmootherOptions prof_sm;
  prof_sm.add_to(profile);
  double prof_sigma = 0.1;
  std::uint64_t prof_seed = 1;
  std::size_t prof_stride = 2;
  double prof_fraction = 0.0;
  std::optional<std::size_t> prof_row;
  std::string prof_out;
  profile->add_option("--sigma", prof_sigma, "noise standard deviation")->capture_default_str();
  profile->add_option("--seed", prof_seed, "random seed")->capture_default_str();
  profile->add_option("--stride", prof_stride, "design on every stride-th pixel in x and y")->capture_default_str();
  profile->add_option("--fraction", prof_fraction, "use a uniform random design of this fraction instead");
  profile->add_option("--row", prof_row, "transect row (default: middle row)");
  profile->add_option("-o,--output", prof_out, "output CSV (default stdout)");

  auto* report = app.add_subcommand("report", "mean and sd of metrics per sampler and sigma");
  std::vector<std::string> report_inputs;
  double report_range = 1.0;
  std::string report_out;
  report->add_option("inputs", report_inputs, "metrics CSV files")->required();
  report->add_option("--signal-range", report_range, "signal range for SNR in dB")->capture_default_str();
  report->add_option("-o,--output", report_out, "output CSV (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) return cmd_synth(synth_in, synth_out);
    if (*design) {
      return cmd_design(design_in, design_sm, design_sampler, design_budget, design_stages, design_sigma, design_seed,
                        design_jb, design_out);
    }
    if (*bench) {
      ExperimentConfig c;
      if (!bench_config.empty()) c = read_experiment_config(bench_config);
      if (!bench_in.spec.empty() || !bench_in.image.empty() || !bench_in.preset.empty()) {
        bench_in.apply(c);
      } else if (bench_in.grid.size() == 2) {
        c.preset_grid = GridShape{bench_in.grid[0], bench_in.grid[1]};
      }
      if (!bench_sigmas.empty()) c.sigmas = bench_sigmas;
      if (!bench_samplers.empty()) {
        c.samplers.clear();
        for (const auto& s : bench_samplers) c.samplers.push_back(parse_strategy(s));
      }
      if (bench_reps) c.n_replications = *bench_reps;
      if (bench_stages) c.n_stages = *bench_stages;
      if (bench_budget) c.budget_fraction = *bench_budget;
      if (bench_seed) c.seed = *bench_seed;
      if (!bench_out.empty()) c.output_dir = bench_out;
      const auto result = run_experiment(c, bench_quiet ? nullptr : &std::cerr);
      std::cout << result.rows.size() << " cells written to " << c.output_dir.string();
      if (!result.failures.empty()) std::cout << ", " << result.failures.size() << " failed (see manifest.txt)";
      std::cout << "\n";
      return result.failures.empty() ? 0 : 3;
    }
    if (*profile) {
      return cmd_profile(prof_in, prof_sm, prof_sigma, prof_seed, prof_stride, prof_fraction, prof_row, prof_out);
    }
    if (*report) return cmd_report(report_inputs, report_range, report_out);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << " (line " << e.line() << ")\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
