#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "jumpdesign/dataset.hpp"
#include "jumpdesign/grid.hpp"
#include "jumpdesign/sampler.hpp"
#include "jumpdesign/smoother.hpp"

namespace jumpdesign {

// Pixels whose Euclidean distance to the nearest jump_mask pixel is <= h.
Mask jump_band(const Mask& jump_mask, double h);

struct MetricsReport {
  std::optional<double> j_mse;  // unset when the band holds no unsampled pixel
  std::optional<double> c_mse;
  std::size_t n_jb = 0;
  std::size_t n_cont = 0;
  double sigma = 0.0;
  std::string sampler;
  std::size_t replication = 0;
  std::size_t stage = 0;
};

// Mean squared error of field against truth over unsampled pixels, split by
// the jump band. Throws std::invalid_argument when some unsampled pixel has
// no estimate in field.
MetricsReport compute_mse(const EstimateField& field, const GroundTruth& truth, const Mask& jb, const Mask& sampled);

struct ProfileRow {
  double x = 0.0;
  double y = 0.0;
  double error = 0.0;
  double proposed = 0.0;
  double wrms_c = 0.0;
  double wrms_j = 0.0;
};

struct ProfileTable {
  std::vector<ProfileRow> rows;
  std::vector<std::string> warnings;
};

// Scales values to sum to one. A curve whose sum is not above
// zero_tol * size (or is non-finite) comes back flat and *flat is set.
std::vector<double> normalize_curve(std::span<const double> values, bool* flat = nullptr, double zero_tol = 0.0);

// Half the L1 distance between two pmfs of equal length.
double total_variation(std::span<const double> a, std::span<const double> b);

// The middle horizontal row of the grid, left to right.
std::vector<double> middle_row_transect(const GridShape& shape);

// Squared estimation error and the three sampling criteria along a transect,
// each normalized to sum to one over the transect. kde settings come from
// sampler; its strategy is ignored.
ProfileTable pmf_vs_error_profile(const GroundTruth& truth, const Dataset& data, std::span<const double> transect,
                                  const SmootherConfig& smoother, const SamplerSpec& sampler = {});

}  // namespace jumpdesign
