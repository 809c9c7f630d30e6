#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "jumpdesign/dataset.hpp"
#include "jumpdesign/design.hpp"
#include "jumpdesign/evaluation.hpp"
#include "jumpdesign/sampler.hpp"
#include "jumpdesign/smoother.hpp"

namespace jumpdesign {

inline constexpr std::string_view kVersion = "1.0.0";

// Experiment description. Text form is one "key = value" per line with '#'
// comments; see format_experiment_config for the full key list.
struct ExperimentConfig {
  // Exactly one input source: a synthetic preset, a synthetic spec file, or an
  // image (with optional jump mask).
  std::string preset = "image1";
  std::optional<GridShape> preset_grid;
  std::filesystem::path spec_path;
  std::filesystem::path image_path;
  std::filesystem::path mask_path;

  std::vector<double> sigmas = {0.1, 0.2, 0.3, 0.4, 0.5};
  double budget_fraction = 0.10;
  std::size_t n_stages = 6;
  std::size_t n_replications = 25;
  std::vector<Strategy> samplers = all_strategies();

  std::optional<std::size_t> k;
  double k_log_factor = 3.0;
  KernelFamily kernel = KernelFamily::Epanechnikov;
  KdeBandwidthRule kde_rule = KdeBandwidthRule::RuleOfThumb;
  double kde_bandwidth = 0.0;
  bool distinct_draws = true;
  double jump_band_h = 6.0;

  std::uint64_t seed = 1;
  std::filesystem::path output_dir = "results";

  // Throws std::invalid_argument on an inconsistent configuration.
  void validate() const;
  SmootherConfig smoother() const;
  SamplerSpec sampler(Strategy s) const;
};

// Throws ParseError with the offending line on unknown keys or bad values.
ExperimentConfig parse_experiment_config(std::string_view text);
ExperimentConfig read_experiment_config(const std::filesystem::path& path);
std::string format_experiment_config(const ExperimentConfig& config);

// Shortest decimal form that reads back to the same double.
std::string format_double(double v);

GroundTruth load_truth(const ExperimentConfig& config);

struct CellFailure {
  std::string sampler;
  double sigma = 0.0;
  std::size_t replication = 0;
  std::string message;
};

struct ExperimentResult {
  std::vector<MetricsReport> rows;
  std::vector<CellFailure> failures;
  std::vector<std::filesystem::path> files;  // relative to output_dir
};

// Seed shared by every (sampler, sigma) cell of one replication.
std::uint64_t replication_seed(std::uint64_t master, std::size_t replication);

// Runs one sequential design and scores it; the building block of
// run_experiment.
MetricsReport run_cell(const GroundTruth& truth, const Mask& band, const ExperimentConfig& config, Strategy sampler,
                       double sigma, std::size_t replication);

// Runs every (sigma, sampler, replication) cell and writes metrics.csv and
// manifest.txt into config.output_dir. A failing cell is recorded in the
// manifest and the remaining cells still run. Progress goes to log if given.
ExperimentResult run_experiment(const ExperimentConfig& config, std::ostream* log = nullptr);

void write_metrics_header(std::ostream& out);
void write_metrics_row(std::ostream& out, const MetricsReport& row);
std::vector<MetricsReport> read_metrics_csv(std::istream& in);

struct SummaryRow {
  std::string sampler;
  double sigma = 0.0;
  double snr_db = 0.0;
  std::size_t n = 0;
  std::size_t n_j = 0;
  std::size_t n_c = 0;
  double mean_j_mse = 0.0;
  double sd_j_mse = 0.0;
  double mean_c_mse = 0.0;
  double sd_c_mse = 0.0;
  double mean_root_j_mse = 0.0;
  double mean_root_c_mse = 0.0;
};

// Mean and sample standard deviation per (sampler, sigma), in first-seen
// sampler order and increasing sigma. Not-applicable metrics are skipped.
std::vector<SummaryRow> summarize(const std::vector<MetricsReport>& rows, double signal_range = 1.0);
void write_summary(std::ostream& out, const std::vector<SummaryRow>& rows, double signal_range = 1.0);

}  // namespace jumpdesign
