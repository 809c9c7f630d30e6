#include "jumpdesign/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <unordered_set>

namespace jumpdesign {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double safe_log(double v) { return v > 0.0 ? std::log(v) : kNegInf; }

}  // namespace

Strategy parse_strategy(std::string_view name) {
  if (name == "proposed") return Strategy::Proposed;
  if (name == "uniform") return Strategy::Uniform;
  if (name == "wrms-c" || name == "wrmsc") return Strategy::WrmsC;
  if (name == "wrms-j" || name == "wrmsj") return Strategy::WrmsJ;
  throw std::invalid_argument("unknown sampler '" + std::string(name) +
                              "' (expected proposed, uniform, wrms-c or wrms-j)");
}

std::string_view strategy_name(Strategy s) {
  switch (s) {
    case Strategy::Proposed: return "proposed";
    case Strategy::Uniform: return "uniform";
    case Strategy::WrmsC: return "wrms-c";
    case Strategy::WrmsJ: return "wrms-j";
  }
  return "proposed";
}

std::vector<Strategy> all_strategies() {
  return {Strategy::Proposed, Strategy::Uniform, Strategy::WrmsC, Strategy::WrmsJ};
}

double desired_density_score(double jump_stat) { return std::exp(jump_stat); }

double kde_density(std::span<const double> x, std::span<const double> flat_points, std::size_t dimension, double h,
                   const KernelSpec& kernel) {
  if (!(h > 0.0)) throw std::invalid_argument("KDE bandwidth must be positive");
  if (dimension == 0 || flat_points.empty() || flat_points.size() % dimension != 0) {
    throw std::invalid_argument("KDE needs a nonempty point set");
  }
  const std::size_t n = flat_points.size() / dimension;
  const double inv_h2 = 1.0 / (h * h);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double u2 = 0.0;
    for (std::size_t d = 0; d < dimension; ++d) {
      const double diff = x[d] - flat_points[i * dimension + d];
      u2 += diff * diff;
    }
    sum += kernel.profile(u2 * inv_h2);
  }
  const double volume = std::pow(h, static_cast<double>(dimension));
  return kernel.normalization(dimension) * sum / (static_cast<double>(n) * volume);
}

double rule_of_thumb_kde_bandwidth(const Box& bounds, std::size_t n) {
  if (n == 0) throw std::invalid_argument("KDE bandwidth rule needs at least one point");
  const double p = static_cast<double>(bounds.dimension());
  return 0.5 * bounds.diameter() * std::pow(static_cast<double>(n), -1.0 / (p + 4.0));
}

double kde_bandwidth(const SamplerSpec& spec, const Box& bounds, std::size_t n) {
  if (spec.kde_rule == KdeBandwidthRule::Fixed) {
    if (!(spec.kde_bandwidth > 0.0)) throw std::invalid_argument("fixed KDE bandwidth must be positive");
    return spec.kde_bandwidth;
  }
  return rule_of_thumb_kde_bandwidth(bounds, n);
}

std::size_t nearest_unsampled_pixel(double x, double y, const Mask& sampled) {
  const auto& g = sampled.shape;
  const auto clampi = [](double v, std::size_t n) -> long long {
    const double r = std::round(v);
    if (!(r > 0.0)) return 0;
    return std::min(static_cast<long long>(r), static_cast<long long>(n) - 1);
  };
  const long long cx = clampi(x, g.width);
  const long long cy = clampi(y, g.height);
  const long long w = static_cast<long long>(g.width);
  const long long h = static_cast<long long>(g.height);
  const long long max_ring = std::max(w, h);

  std::size_t best = g.size();
  double best_d2 = std::numeric_limits<double>::infinity();
  for (long long r = 0; r <= max_ring; ++r) {
    // every pixel in ring r is at least r - 0.5 away from (x, y) along one axis
    if (best != g.size()) {
      const double reach = static_cast<double>(r) - 0.5;
      if (reach > 0.0 && reach * reach > best_d2) break;
    }
    for (long long py = cy - r; py <= cy + r; ++py) {
      if (py < 0 || py >= h) continue;
      const bool edge_row = (py == cy - r || py == cy + r);
      const long long step = edge_row ? 1 : 2 * r;
      for (long long px = cx - r; px <= cx + r; px += (step == 0 ? 1 : step)) {
        if (px < 0 || px >= w) continue;
        const std::size_t idx = g.index(static_cast<std::size_t>(px), static_cast<std::size_t>(py));
        if (sampled.test(idx)) continue;
        const double dx = static_cast<double>(px) - x;
        const double dy = static_cast<double>(py) - y;
        const double d2 = dx * dx + dy * dy;
        if (d2 < best_d2 || (d2 == best_d2 && idx < best)) {
          best_d2 = d2;
          best = idx;
        }
      }
    }
  }
  return best;
}

std::vector<double> candidate_locations(const Dataset& data, const Mask* sampled, std::uint64_t seed) {
  const std::size_t p = data.dimension();
  std::vector<double> out;
  if (p == 2) {
    const auto centroids = delaunay_centroids(data.flat_coords(), 2);
    if (sampled) {
      std::unordered_set<std::size_t> taken;
      for (const auto& c : centroids) {
        const std::size_t idx = nearest_unsampled_pixel(c.x, c.y, *sampled);
        if (idx == sampled->shape.size() || !taken.insert(idx).second) continue;
        const auto xy = sampled->shape.coords(idx);
        out.push_back(xy[0]);
        out.push_back(xy[1]);
      }
    } else {
      for (const auto& c : centroids) {
        out.push_back(c.x);
        out.push_back(c.y);
      }
    }
    return out;
  }

  // no simplicial mesh outside 2-D: uniform random pool
  std::mt19937_64 gen(seed);
  const auto& box = data.bounds();
  const std::size_t want = 2 * std::max<std::size_t>(data.size(), 1);
  std::vector<std::uniform_real_distribution<double>> axes;
  for (std::size_t d = 0; d < p; ++d) axes.emplace_back(box.lo[d], box.hi[d]);
  Coords x(p);
  for (std::size_t i = 0; i < want; ++i) {
    for (std::size_t d = 0; d < p; ++d) x[d] = axes[d](gen);
    if (data.contains(x)) continue;
    out.insert(out.end(), x.begin(), x.end());
  }
  return out;
}

CandidateScores score_candidates(std::span<const double> flat_candidates, const Dataset& data,
                                 const SpatialIndex& index, const SamplerSpec& spec, const SmootherConfig& smoother) {
  const std::size_t p = data.dimension();
  const std::size_t m = flat_candidates.size() / p;
  CandidateScores s;
  if (spec.strategy == Strategy::Uniform) {
    s.log_scores.assign(m, 0.0);
    return s;
  }
  s.estimates = estimate_field(flat_candidates, data, index, smoother).estimates;
  s.log_scores.resize(m);
  switch (spec.strategy) {
    case Strategy::Proposed: {
      const double h = kde_bandwidth(spec, data.bounds(), data.size());
      s.densities.resize(m);
      double max_density = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        s.densities[i] = kde_density(flat_candidates.subspan(i * p, p), data.flat_coords(), p, h, smoother.kernel);
        max_density = std::max(max_density, s.densities[i]);
      }
      const double floor = max_density > 0.0 ? spec.kde_floor_fraction * max_density : 1.0;
      for (std::size_t i = 0; i < m; ++i) {
        s.log_scores[i] = s.estimates[i].jump_stat - std::log(std::max(s.densities[i], floor));
      }
      break;
    }
    case Strategy::WrmsC:
      for (std::size_t i = 0; i < m; ++i) s.log_scores[i] = safe_log(s.estimates[i].err_0);
      break;
    case Strategy::WrmsJ:
      for (std::size_t i = 0; i < m; ++i) {
        s.log_scores[i] = safe_log(std::min(s.estimates[i].err_1, s.estimates[i].err_2));
      }
      break;
    case Strategy::Uniform:
      break;
  }
  return s;
}

std::vector<double> normalize_log_scores(std::span<const double> log_scores, bool* all_zero) {
  std::vector<double> probs(log_scores.size(), 0.0);
  if (all_zero) *all_zero = false;
  if (log_scores.empty()) return probs;
  const double top = *std::max_element(log_scores.begin(), log_scores.end());
  if (!std::isfinite(top)) {
    if (all_zero) *all_zero = true;
    std::fill(probs.begin(), probs.end(), 1.0 / static_cast<double>(probs.size()));
    return probs;
  }
  double total = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    probs[i] = std::exp(log_scores[i] - top);
    total += probs[i];
  }
  for (double& v : probs) v /= total;
  return probs;
}

StagePmf stage_pmf(const Dataset& data, const SpatialIndex& index, const SamplerSpec& spec,
                   const SmootherConfig& smoother, const Mask* sampled) {
  StagePmf pmf;
  pmf.dimension = data.dimension();
  pmf.candidates = candidate_locations(data, sampled, spec.seed);
  pmf.scores = score_candidates(pmf.candidates, data, index, spec, smoother);
  pmf.probs = normalize_log_scores(pmf.scores.log_scores, &pmf.uniform_fallback);
  if (pmf.uniform_fallback && !pmf.probs.empty()) {
    std::clog << "stage pmf: every " << strategy_name(spec.strategy)
              << " score is zero, falling back to uniform over " << pmf.probs.size() << " candidates\n";
  }
  return pmf;
}

DrawResult draw_stage(const StagePmf& pmf, std::size_t n_stage, std::uint64_t seed, bool distinct) {
  if (pmf.size() == 0) throw std::invalid_argument("cannot draw from an empty pmf");
  DrawResult out;
  std::mt19937_64 gen(seed);
  const std::size_t m = pmf.size();

  if (!distinct) {
    std::discrete_distribution<std::size_t> dist(pmf.probs.begin(), pmf.probs.end());
    for (std::size_t i = 0; i < n_stage; ++i) out.indices.push_back(dist(gen));
  } else {
    std::vector<double> weight(pmf.probs.begin(), pmf.probs.end());
    std::vector<std::uint8_t> used(m, 0);
    const std::size_t target = std::min(n_stage, m);
    while (out.indices.size() < target) {
      const double total = std::accumulate(weight.begin(), weight.end(), 0.0);
      std::size_t pick = m;
      if (total > 0.0) {
        const double u = std::uniform_real_distribution<double>(0.0, total)(gen);
        double acc = 0.0;
        std::size_t last_positive = m;
        for (std::size_t i = 0; i < m; ++i) {
          if (weight[i] <= 0.0) continue;
          last_positive = i;
          acc += weight[i];
          if (u < acc) {
            pick = i;
            break;
          }
        }
        if (pick == m) pick = last_positive;
      } else {
        std::vector<std::size_t> rest;
        for (std::size_t i = 0; i < m; ++i) {
          if (!used[i]) rest.push_back(i);
        }
        pick = rest[std::uniform_int_distribution<std::size_t>(0, rest.size() - 1)(gen)];
      }
      used[pick] = 1;
      weight[pick] = 0.0;
      out.indices.push_back(pick);
    }
    out.shortfall = n_stage - target;
  }
  for (std::size_t i : out.indices) {
    const auto loc = pmf.location(i);
    out.coords.insert(out.coords.end(), loc.begin(), loc.end());
  }
  return out;
}

}  // namespace jumpdesign
