#include "jumpdesign/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "jumpdesign/spatial.hpp"

namespace jumpdesign {

namespace {

// squared quantities this small are round-off on an exact fit
constexpr double kSquaredZero = 1e-24;

}  // namespace

Mask jump_band(const Mask& jump_mask, double h) {
  if (!(h >= 0.0)) throw std::invalid_argument("jump band radius must be nonnegative");
  const GridShape g = jump_mask.shape;
  Mask band(g);
  const double h2 = h * h;
  const long long r = static_cast<long long>(std::floor(h));
  const long long w = static_cast<long long>(g.width);
  const long long ht = static_cast<long long>(g.height);
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    if (!jump_mask.test(idx)) continue;
    const long long cx = static_cast<long long>(g.x_of(idx));
    const long long cy = static_cast<long long>(g.y_of(idx));
    for (long long y = std::max(0LL, cy - r); y <= std::min(ht - 1, cy + r); ++y) {
      for (long long x = std::max(0LL, cx - r); x <= std::min(w - 1, cx + r); ++x) {
        const double dx = static_cast<double>(x - cx);
        const double dy = static_cast<double>(y - cy);
        if (dx * dx + dy * dy <= h2) band.set(g.index(static_cast<std::size_t>(x), static_cast<std::size_t>(y)));
      }
    }
  }
  return band;
}

MetricsReport compute_mse(const EstimateField& field, const GroundTruth& truth, const Mask& jb, const Mask& sampled) {
  const GridShape g = sampled.shape;
  if (!(jb.shape == g)) throw std::invalid_argument("jump band and sampled mask have different shapes");
  std::vector<std::uint8_t> seen(g.size(), 0);
  double sum_jb = 0.0;
  double sum_cont = 0.0;
  MetricsReport r;
  for (std::size_t i = 0; i < field.size(); ++i) {
    const auto loc = field.location(i);
    const std::size_t idx = g.index_of(loc[0], loc[1]);
    if (idx >= g.size() || sampled.test(idx) || seen[idx]) continue;
    seen[idx] = 1;
    const double e = field.estimates[i].m_hat - truth.eval(loc);
    if (jb.test(idx)) {
      sum_jb += e * e;
      ++r.n_jb;
    } else {
      sum_cont += e * e;
      ++r.n_cont;
    }
  }
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    if (!sampled.test(idx) && !seen[idx]) {
      throw std::invalid_argument("estimate field misses unsampled pixel (" + std::to_string(g.x_of(idx)) + ", " +
                                  std::to_string(g.y_of(idx)) + ")");
    }
  }
  if (r.n_jb > 0) r.j_mse = sum_jb / static_cast<double>(r.n_jb);
  if (r.n_cont > 0) r.c_mse = sum_cont / static_cast<double>(r.n_cont);
  return r;
}

std::vector<double> normalize_curve(std::span<const double> values, bool* flat, double zero_tol) {
  std::vector<double> out(values.begin(), values.end());
  double total = 0.0;
  for (double v : values) total += v;
  const bool bad = !(total > zero_tol * static_cast<double>(values.size())) || !std::isfinite(total);
  if (flat) *flat = bad;
  if (out.empty()) return out;
  if (bad) {
    std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(out.size()));
    return out;
  }
  for (double& v : out) v /= total;
  return out;
}

double total_variation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("total variation needs curves of equal length");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return 0.5 * s;
}

std::vector<double> middle_row_transect(const GridShape& shape) {
  if (shape.empty()) throw std::invalid_argument("empty grid has no transect");
  const double y = static_cast<double>(shape.height / 2);
  std::vector<double> out;
  out.reserve(2 * shape.width);
  for (std::size_t x = 0; x < shape.width; ++x) {
    out.push_back(static_cast<double>(x));
    out.push_back(y);
  }
  return out;
}

ProfileTable pmf_vs_error_profile(const GroundTruth& truth, const Dataset& data, std::span<const double> transect,
                                  const SmootherConfig& smoother, const SamplerSpec& sampler) {
  if (data.dimension() != 2) throw std::invalid_argument("profile study expects 2-D data");
  if (transect.empty() || transect.size() % 2 != 0) throw std::invalid_argument("transect must hold (x, y) pairs");
  if (truth.grid) {
    for (std::size_t i = 0; i < transect.size(); i += 2) {
      if (truth.grid->index_of(transect[i], transect[i + 1]) >= truth.grid->size()) {
        throw std::invalid_argument("transect location is not a grid pixel");
      }
    }
  }
  const std::size_t m = transect.size() / 2;
  const SpatialIndex index(data);
  SamplerSpec spec = sampler;
  spec.strategy = Strategy::Proposed;
  const CandidateScores proposed = score_candidates(transect, data, index, spec, smoother);

  std::vector<double> err(m), prop(m), wc(m), wj(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto& e = proposed.estimates[i];
    const double d = e.m_hat - truth.eval(transect.subspan(2 * i, 2));
    err[i] = d * d;
    prop[i] = proposed.log_scores[i];
    wc[i] = e.err_0;
    wj[i] = std::min(e.err_1, e.err_2);
  }
  // the proposed curve is a softmax of log scores over the transect
  bool flat_prop = false;
  prop = normalize_log_scores(prop, &flat_prop);

  ProfileTable table;
  const auto note = [&](bool flat, const char* name) {
    if (flat) table.warnings.push_back(std::string(name) + " curve sums to zero along the transect; reported flat");
  };
  note(flat_prop, "proposed");
  bool flat = false;
  err = normalize_curve(err, &flat, kSquaredZero);
  note(flat, "error");
  wc = normalize_curve(wc, &flat, kSquaredZero);
  note(flat, "wrms-c");
  wj = normalize_curve(wj, &flat, kSquaredZero);
  note(flat, "wrms-j");

  table.rows.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    table.rows[i] = {transect[2 * i], transect[2 * i + 1], err[i], prop[i], wc[i], wj[i]};
  }
  return table;
}

}  // namespace jumpdesign
