#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "jumpdesign/dataset.hpp"
#include "jumpdesign/grid.hpp"
#include "jumpdesign/smoother.hpp"
#include "jumpdesign/spatial.hpp"

namespace jumpdesign {

enum class Strategy { Proposed, Uniform, WrmsC, WrmsJ };

Strategy parse_strategy(std::string_view name);
std::string_view strategy_name(Strategy s);
std::vector<Strategy> all_strategies();

enum class KdeBandwidthRule {
  RuleOfThumb,  // half the design-box diameter times n^(-1/(p+4))
  Fixed,        // SamplerSpec::kde_bandwidth
};

struct SamplerSpec {
  Strategy strategy = Strategy::Proposed;
  KdeBandwidthRule kde_rule = KdeBandwidthRule::RuleOfThumb;
  double kde_bandwidth = 0.0;
  double kde_floor_fraction = 1e-8;
  std::uint64_t seed = 0;
  // Reject repeated locations within a stage instead of drawing i.i.d.
  bool distinct_draws = true;
};

// exp(jump_stat); the normalising constant is left to the pmf.
double desired_density_score(double jump_stat);

// (1 / (n h^p)) * sum K((x - x_i) / h) with a normalized kernel.
double kde_density(std::span<const double> x, std::span<const double> flat_points, std::size_t dimension, double h,
                   const KernelSpec& kernel);

double rule_of_thumb_kde_bandwidth(const Box& bounds, std::size_t n);
double kde_bandwidth(const SamplerSpec& spec, const Box& bounds, std::size_t n);

// Next-stage candidate locations, row-major. In 2-D these are the centroids
// of the Delaunay triangles of the current design; with a sampled-pixel mask
// each centroid moves to the nearest unsampled pixel (ties by row, then
// column) and repeats are dropped. Other dimensions use a seeded uniform pool
// of 2n points in the bounding box.
std::vector<double> candidate_locations(const Dataset& data, const Mask* sampled, std::uint64_t seed);

// Nearest pixel of shape not marked in sampled, or shape.size() when every
// pixel is sampled.
std::size_t nearest_unsampled_pixel(double x, double y, const Mask& sampled);

struct CandidateScores {
  std::vector<PointEstimate> estimates;  // empty for Uniform
  std::vector<double> densities;         // KDE of the design, Proposed only
  std::vector<double> log_scores;        // -inf encodes a zero score
};

// Unnormalized log score per strategy: Proposed jump_stat - log(max(kde, eps))
// with eps = kde_floor_fraction * max kde; Uniform 0; WRMS-C log err_0;
// WRMS-J log min(err_1, err_2).
CandidateScores score_candidates(std::span<const double> flat_candidates, const Dataset& data,
                                 const SpatialIndex& index, const SamplerSpec& spec, const SmootherConfig& smoother);

// exp(log_scores) / sum, computed with the maximum factored out. Returns the
// uniform pmf (and sets *all_zero) when every score is zero.
std::vector<double> normalize_log_scores(std::span<const double> log_scores, bool* all_zero = nullptr);

struct StagePmf {
  std::size_t dimension = 0;
  std::vector<double> candidates;
  std::vector<double> probs;
  CandidateScores scores;
  bool uniform_fallback = false;

  std::size_t size() const { return probs.size(); }
  std::span<const double> location(std::size_t i) const { return {candidates.data() + i * dimension, dimension}; }
};

StagePmf stage_pmf(const Dataset& data, const SpatialIndex& index, const SamplerSpec& spec,
                   const SmootherConfig& smoother, const Mask* sampled = nullptr);

struct DrawResult {
  std::vector<std::size_t> indices;  // into the pmf candidates, in draw order
  std::vector<double> coords;        // row-major locations of the draws
  std::size_t shortfall = 0;         // requested minus returned
};

// Draws n_stage locations from pmf. With distinct draws, each draw is taken
// from the remaining candidates in proportion to their probability (the same
// law as redrawing on duplicates); once positive mass runs out, zero-mass
// candidates are taken uniformly. Throws std::invalid_argument on an empty pmf.
DrawResult draw_stage(const StagePmf& pmf, std::size_t n_stage, std::uint64_t seed, bool distinct = true);

}  // namespace jumpdesign
