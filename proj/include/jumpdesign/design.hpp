#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "jumpdesign/dataset.hpp"
#include "jumpdesign/grid.hpp"
#include "jumpdesign/sampler.hpp"
#include "jumpdesign/smoother.hpp"

namespace jumpdesign {

struct DesignConfig {
  SamplerSpec sampler;
  SmootherConfig smoother;
  double budget_fraction = 0.10;
  std::size_t n_stages = 6;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  // Keep the candidate estimates of every adaptive stage in the result.
  bool keep_stage_fields = false;
};

struct StageRecord {
  std::size_t stage = 0;  // 1-based
  std::size_t requested = 0;
  std::size_t drawn = 0;
  std::size_t candidates = 0;  // 0 for the uniform first stage
  bool uniform_fallback = false;
  EstimateField field;         // candidate estimates, when kept
};

struct DesignResult {
  Dataset data;
  Mask sampled;
  std::size_t budget = 0;
  std::vector<StageRecord> stages;
  std::vector<std::string> warnings;
};

// round(fraction * grid_size), clipped to the grid with a warning.
std::size_t design_budget(std::size_t grid_size, double fraction, std::vector<std::string>* warnings = nullptr);

// ceil(total / n_stages) per stage, the last stage taking the remainder.
std::vector<std::size_t> stage_allotments(std::size_t total, std::size_t n_stages);

// Multi-stage design on truth's grid. Stage 1 is a simple random sample of the
// grid; later stages draw from stage_pmf with all data gathered so far. Noise
// is taken lazily at each sampled pixel. A stage that runs short of distinct
// candidates carries the deficit into the next stage; the last stage tops up
// with uniformly chosen unsampled pixels.
DesignResult run_sequential_design(const GroundTruth& truth, const DesignConfig& config);

// Jump-preserving estimate at every pixel not marked in sampled.
EstimateField estimate_unsampled(const Dataset& data, const Mask& sampled, const SmootherConfig& smoother);

// Image of m_hat over the whole grid: estimates at field locations, observed
// values at sampled pixels.
Image reconstruct_image(const EstimateField& field, const Dataset& data, const GridShape& shape);

}  // namespace jumpdesign
