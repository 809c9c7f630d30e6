#include "jumpdesign/design.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "jumpdesign/random.hpp"
#include "jumpdesign/spatial.hpp"

namespace jumpdesign {

namespace {

constexpr std::uint64_t kNoiseStream = 0x6e6f697365ULL;
constexpr std::uint64_t kStageStream = 0x7374616765ULL;

// Picks count distinct unsampled pixels uniformly, in draw order.
std::vector<std::size_t> uniform_unsampled(const Mask& sampled, std::size_t count, std::mt19937_64& gen) {
  std::vector<std::size_t> pool;
  pool.reserve(sampled.shape.size());
  for (std::size_t i = 0; i < sampled.shape.size(); ++i) {
    if (!sampled.test(i)) pool.push_back(i);
  }
  count = std::min(count, pool.size());
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = std::uniform_int_distribution<std::size_t>(i, pool.size() - 1)(gen);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  return pool;
}

void ingest_pixel(const GroundTruth& truth, DesignResult& out, std::size_t idx, double sigma, std::uint64_t noise_seed) {
  const auto xy = out.sampled.shape.coords(idx);
  const double y = observe_at(truth, xy, sigma, noise_seed);
  out.data.insert(xy, y);
  out.sampled.set(idx);
}

}  // namespace

std::size_t design_budget(std::size_t grid_size, double fraction, std::vector<std::string>* warnings) {
  if (!(fraction > 0.0) || !std::isfinite(fraction)) {
    throw std::invalid_argument("budget fraction must be positive");
  }
  const double raw = std::round(fraction * static_cast<double>(grid_size));
  if (raw > static_cast<double>(grid_size)) {
    if (warnings) {
      std::ostringstream msg;
      msg << "budget " << raw << " exceeds the " << grid_size << " grid locations; clipped";
      warnings->push_back(msg.str());
    }
    return grid_size;
  }
  return static_cast<std::size_t>(raw);
}

std::vector<std::size_t> stage_allotments(std::size_t total, std::size_t n_stages) {
  if (n_stages == 0) throw std::invalid_argument("need at least one stage");
  const std::size_t per = (total + n_stages - 1) / n_stages;
  std::vector<std::size_t> out(n_stages, 0);
  std::size_t left = total;
  for (std::size_t s = 0; s < n_stages; ++s) {
    out[s] = std::min(per, left);
    left -= out[s];
  }
  return out;
}

DesignResult run_sequential_design(const GroundTruth& truth, const DesignConfig& config) {
  if (!truth.grid) throw std::invalid_argument("sequential design needs a gridded ground truth");
  if (config.budget_fraction > 1.0) throw std::invalid_argument("budget fraction must lie in (0, 1]");
  if (config.sigma < 0.0) throw std::invalid_argument("noise sigma must be nonnegative");
  const GridShape shape = *truth.grid;

  DesignResult out{Dataset(2, truth.bounds), Mask(shape), 0, {}, {}};
  out.budget = design_budget(shape.size(), config.budget_fraction, &out.warnings);
  const auto allot = stage_allotments(out.budget, config.n_stages);
  const std::size_t min_first = 2 * (2 + 1);
  if (config.n_stages > 1 && allot[0] < min_first) {
    throw std::invalid_argument("first stage has " + std::to_string(allot[0]) +
                                " points; at least 6 are needed to fit the adaptive stages");
  }

  const std::uint64_t noise_seed = derive_seed(config.seed, kNoiseStream);
  std::mt19937_64 first_gen(derive_seed(config.seed, kStageStream));
  for (std::size_t idx : uniform_unsampled(out.sampled, allot[0], first_gen)) {
    ingest_pixel(truth, out, idx, config.sigma, noise_seed);
  }
  out.stages.push_back({1, allot[0], out.data.size(), 0, false, {}});

  std::size_t carry = 0;
  for (std::size_t s = 1; s < config.n_stages; ++s) {
    StageRecord rec;
    rec.stage = s + 1;
    rec.requested = allot[s] + carry;
    if (rec.requested == 0) {
      out.stages.push_back(std::move(rec));
      continue;
    }
    const SpatialIndex index(out.data);
    SamplerSpec spec = config.sampler;
    spec.seed = derive_seed(config.seed, kStageStream + 2 * s);
    const StagePmf pmf = stage_pmf(out.data, index, spec, config.smoother, &out.sampled);
    rec.candidates = pmf.size();
    rec.uniform_fallback = pmf.uniform_fallback;
    if (rec.uniform_fallback) {
      out.warnings.push_back("stage " + std::to_string(rec.stage) + ": all scores zero, uniform pmf used");
    }
    std::size_t drawn = 0;
    if (pmf.size() > 0) {
      const DrawResult draw = draw_stage(pmf, rec.requested, derive_seed(config.seed, kStageStream + 2 * s + 1),
                                         config.sampler.distinct_draws);
      for (std::size_t i = 0; i < draw.indices.size(); ++i) {
        const auto loc = pmf.location(draw.indices[i]);
        const std::size_t idx = shape.index_of(loc[0], loc[1]);
        if (out.sampled.test(idx)) continue;  // i.i.d. mode may repeat a pixel
        ingest_pixel(truth, out, idx, config.sigma, noise_seed);
        ++drawn;
      }
    }
    carry = rec.requested - drawn;
    if (carry > 0) {
      std::ostringstream msg;
      msg << "stage " << rec.stage << ": " << drawn << " of " << rec.requested << " points drawn";
      if (s + 1 == config.n_stages) {
        std::mt19937_64 fill_gen(derive_seed(config.seed, kStageStream + 2 * s + 1) ^ 0x1ULL);
        const auto extra = uniform_unsampled(out.sampled, carry, fill_gen);
        for (std::size_t idx : extra) ingest_pixel(truth, out, idx, config.sigma, noise_seed);
        drawn += extra.size();
        msg << "; " << extra.size() << " filled uniformly";
      } else {
        msg << "; deficit carried to the next stage";
      }
      out.warnings.push_back(msg.str());
    }
    rec.drawn = drawn;
    if (config.keep_stage_fields && !pmf.scores.estimates.empty()) {
      rec.field.dimension = 2;
      rec.field.coords = pmf.candidates;
      rec.field.estimates = pmf.scores.estimates;
    }
    out.stages.push_back(std::move(rec));
  }
  return out;
}

EstimateField estimate_unsampled(const Dataset& data, const Mask& sampled, const SmootherConfig& smoother) {
  std::vector<double> locs;
  for (std::size_t i = 0; i < sampled.shape.size(); ++i) {
    if (sampled.test(i)) continue;
    const auto xy = sampled.shape.coords(i);
    locs.push_back(xy[0]);
    locs.push_back(xy[1]);
  }
  const SpatialIndex index(data);
  return estimate_field(locs, data, index, smoother);
}

Image reconstruct_image(const EstimateField& field, const Dataset& data, const GridShape& shape) {
  Image img(shape, 0.0);
  for (std::size_t i = 0; i < field.size(); ++i) {
    const auto loc = field.location(i);
    const std::size_t idx = shape.index_of(loc[0], loc[1]);
    if (idx < shape.size()) img.pixels[idx] = field.estimates[i].m_hat;
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto loc = data.coords(i);
    const std::size_t idx = shape.index_of(loc[0], loc[1]);
    if (idx < shape.size()) img.pixels[idx] = data.value(i);
  }
  return img;
}

}  // namespace jumpdesign
