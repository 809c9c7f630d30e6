#include "jumpdesign/smoother.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

namespace jumpdesign {

namespace {

int profile_power(KernelFamily f) {
  switch (f) {
    case KernelFamily::Epanechnikov: return 1;
    case KernelFamily::Triweight: return 3;
    case KernelFamily::Uniform: return 0;
  }
  return 1;
}

constexpr double kBetaNegligible = 1e-12;
constexpr double kPivotTolerance = 1e-10;
constexpr double kRidgeScale = 1e-12;

// In-place LDL^T solve of a small symmetric system stored row-major.
// Returns false when a pivot falls below tol * max diagonal.
bool ldlt_solve(std::vector<double> a, std::vector<double>& rhs, std::size_t n, double tol) {
  double max_diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, std::abs(a[i * n + i]));
  if (!(max_diag > 0.0)) return false;
  const double floor = tol * max_diag;
  for (std::size_t j = 0; j < n; ++j) {
    double d = a[j * n + j];
    for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k] * a[k * n + k];
    if (!(d > floor)) return false;
    a[j * n + j] = d;
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) v -= a[i * n + k] * a[j * n + k] * a[k * n + k];
      a[i * n + j] = v / d;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < i; ++k) rhs[i] -= a[i * n + k] * rhs[k];
  }
  for (std::size_t i = 0; i < n; ++i) rhs[i] /= a[i * n + i];
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t k = i + 1; k < n; ++k) rhs[i] -= a[k * n + i] * rhs[k];
  }
  return true;
}

struct WeightedPoint {
  std::size_t row;
  double weight;
};

std::vector<WeightedPoint> kernel_weights(std::span<const double> x, const Dataset& data,
                                          std::span<const std::size_t> members, double h,
                                          const KernelSpec& kernel) {
  const std::size_t p = data.dimension();
  std::vector<WeightedPoint> out;
  out.reserve(members.size());
  const double inv_h2 = 1.0 / (h * h);
  for (std::size_t row : members) {
    const auto xi = data.coords(row);
    double u2 = 0.0;
    for (std::size_t d = 0; d < p; ++d) u2 += (xi[d] - x[d]) * (xi[d] - x[d]);
    const double w = kernel.profile(u2 * inv_h2);
    if (w > 0.0) out.push_back({row, w});
  }
  return out;
}

// Local linear fit in coordinates scaled by 1/h for conditioning; the slope is
// mapped back to data units on return.
LocalFit solve_local_linear(std::span<const double> x, const Dataset& data, std::span<const WeightedPoint> pts,
                            double h) {
  const std::size_t p = data.dimension();
  const std::size_t m = p + 1;
  LocalFit fit;
  fit.beta.assign(p, 0.0);
  fit.n_used = pts.size();
  if (pts.empty()) throw EmptyNeighborhood();

  std::vector<double> normal(m * m, 0.0);
  std::vector<double> rhs(m, 0.0);
  std::vector<double> z(m);
  for (const auto& wp : pts) {
    const auto xi = data.coords(wp.row);
    z[0] = 1.0;
    for (std::size_t d = 0; d < p; ++d) z[d + 1] = (xi[d] - x[d]) / h;
    const double y = data.value(wp.row);
    for (std::size_t r = 0; r < m; ++r) {
      rhs[r] += wp.weight * z[r] * y;
      for (std::size_t c = 0; c <= r; ++c) normal[r * m + c] += wp.weight * z[r] * z[c];
    }
    fit.weight_sum += wp.weight;
  }
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = r + 1; c < m; ++c) normal[r * m + c] = normal[c * m + r];
  }

  std::vector<double> coef = rhs;
  if (!ldlt_solve(normal, coef, m, kPivotTolerance)) {
    fit.rank_deficient = true;
    double trace = 0.0;
    for (std::size_t i = 0; i < m; ++i) trace += normal[i * m + i];
    const double ridge = kRidgeScale * trace / static_cast<double>(m);
    for (std::size_t i = 0; i < m; ++i) normal[i * m + i] += ridge;
    coef = rhs;
    if (!ldlt_solve(normal, coef, m, 0.0)) {
      // all-zero design beyond the intercept column; the weighted mean is the
      // least squares intercept
      coef.assign(m, 0.0);
      coef[0] = rhs[0] / normal[0];
    }
  }

  double sse = 0.0;
  for (const auto& wp : pts) {
    const auto xi = data.coords(wp.row);
    double pred = coef[0];
    for (std::size_t d = 0; d < p; ++d) pred += coef[d + 1] * (xi[d] - x[d]) / h;
    const double r = data.value(wp.row) - pred;
    sse += wp.weight * r * r;
  }
  fit.alpha = coef[0];
  for (std::size_t d = 0; d < p; ++d) fit.beta[d] = coef[d + 1] / h;
  fit.wrms = sse / fit.weight_sum;
  return fit;
}

// Intercept-only fallback with the slope held at beta: weighted mean of
// y - beta . (x_i - x), and its weighted residual mean square.
LocalFit anchored_mean_fit(std::span<const double> x, const Dataset& data, std::span<const WeightedPoint> pts,
                           std::span<const double> beta) {
  const std::size_t p = data.dimension();
  LocalFit fit;
  fit.beta.assign(beta.begin(), beta.end());
  fit.n_used = pts.size();
  std::vector<double> offset(pts.size());
  double sw = 0.0;
  double swy = 0.0;
  for (std::size_t j = 0; j < pts.size(); ++j) {
    const auto xi = data.coords(pts[j].row);
    double t = data.value(pts[j].row);
    for (std::size_t d = 0; d < p; ++d) t -= beta[d] * (xi[d] - x[d]);
    offset[j] = t;
    sw += pts[j].weight;
    swy += pts[j].weight * t;
  }
  fit.weight_sum = sw;
  fit.alpha = swy / sw;
  double sse = 0.0;
  for (std::size_t j = 0; j < pts.size(); ++j) {
    const double r = offset[j] - fit.alpha;
    sse += pts[j].weight * r * r;
  }
  fit.wrms = sse / sw;
  return fit;
}

bool supports_linear_fit(const LocalFit& fit, std::size_t min_points) {
  return fit.n_used >= min_points && !fit.rank_deficient;
}

}  // namespace

KernelFamily parse_kernel_family(std::string_view name) {
  if (name == "epanechnikov") return KernelFamily::Epanechnikov;
  if (name == "triweight") return KernelFamily::Triweight;
  if (name == "uniform") return KernelFamily::Uniform;
  throw std::invalid_argument("unknown kernel '" + std::string(name) +
                              "' (expected epanechnikov, triweight or uniform)");
}

std::string_view kernel_family_name(KernelFamily family) {
  switch (family) {
    case KernelFamily::Epanechnikov: return "epanechnikov";
    case KernelFamily::Triweight: return "triweight";
    case KernelFamily::Uniform: return "uniform";
  }
  return "epanechnikov";
}

double KernelSpec::profile(double squared_norm) const {
  if (!(squared_norm <= 1.0)) return 0.0;
  const double t = 1.0 - squared_norm;
  switch (family) {
    case KernelFamily::Epanechnikov: return t;
    case KernelFamily::Triweight: return t * t * t;
    case KernelFamily::Uniform: return 1.0;
  }
  return t;
}

double KernelSpec::normalization(std::size_t p) const {
  // integral of (1 - |u|^2)^s over the unit ball in R^p is
  // pi^(p/2) * s! / Gamma(s + 1 + p/2)
  const double s = profile_power(family);
  const double half_p = 0.5 * static_cast<double>(p);
  return std::exp(std::lgamma(s + 1.0 + half_p) - std::lgamma(s + 1.0) - half_p * std::log(std::numbers::pi));
}

double KernelSpec::density(std::span<const double> u) const {
  double u2 = 0.0;
  for (double v : u) u2 += v * v;
  return normalization(u.size()) * profile(u2);
}

LocalFit fit_local_linear(std::span<const double> x, const Dataset& data, double h, const KernelSpec& kernel) {
  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return fit_local_linear(x, data, all, h, kernel);
}

LocalFit fit_local_linear(std::span<const double> x, const Dataset& data, std::span<const std::size_t> members,
                          double h, const KernelSpec& kernel) {
  if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("bandwidth must be positive and finite");
  if (x.size() != data.dimension()) throw std::invalid_argument("query dimension does not match the dataset");
  const auto pts = kernel_weights(x, data, members, h, kernel);
  return solve_local_linear(x, data, pts, h);
}

NeighborhoodSplit split_neighborhood(std::span<const double> x, std::span<const double> beta0, const Dataset& data,
                                     std::span<const std::size_t> members) {
  NeighborhoodSplit split;
  double norm2 = 0.0;
  for (double b : beta0) norm2 += b * b;
  split.axis_fallback = !(std::sqrt(norm2) >= kBetaNegligible);
  for (std::size_t row : members) {
    const auto xi = data.coords(row);
    double s = 0.0;
    if (split.axis_fallback) {
      s = xi[0] - x[0];
    } else {
      for (std::size_t d = 0; d < x.size(); ++d) s += beta0[d] * (xi[d] - x[d]);
    }
    (s >= 0.0 ? split.side1 : split.side2).push_back(row);
  }
  return split;
}

std::size_t SmootherConfig::neighbor_count(std::size_t n, std::size_t p) const {
  if (k) return std::min(*k, n);
  return default_neighbor_count(n, p, k_log_factor);
}

PointEstimate estimate_point(std::span<const double> x, const Dataset& data, const SpatialIndex& index,
                             const SmootherConfig& config) {
  const std::size_t p = data.dimension();
  const std::size_t n = data.size();
  if (x.size() != p) throw std::invalid_argument("query dimension does not match the dataset");
  if (n < 2 * (p + 1)) {
    throw std::invalid_argument("need at least " + std::to_string(2 * (p + 1)) +
                                " observations for one-sided estimation, have " + std::to_string(n));
  }
  const std::size_t available = data.contains(x) ? n - 1 : n;
  const std::size_t k0 = std::max<std::size_t>(1, std::min(config.neighbor_count(n, p), available));

  const std::size_t min_side = config.min_side_points == 0 ? 2 * (p + 1) : std::max(p + 1, config.min_side_points);

  PointEstimate est;
  std::vector<WeightedPoint> full;
  std::vector<WeightedPoint> w1;
  std::vector<WeightedPoint> w2;
  LocalFit conv;
  LocalFit fit1;
  LocalFit fit2;
  bool have_conv = false;
  bool ok1 = false;
  bool ok2 = false;
  double h = 0.0;
  std::size_t k = k0;

  for (std::size_t attempt = 0; attempt <= config.max_doublings; ++attempt) {
    if (attempt > 0) {
      if (k >= available) break;
      k = std::min(k * 2, available);
      est.degenerate = true;
    }
    h = knn_bandwidth(index, x, k);
    const auto nbrs = index.within(x, h);
    std::vector<std::size_t> members;
    members.reserve(nbrs.size());
    for (const auto& nb : nbrs) members.push_back(nb.index);

    full = kernel_weights(x, data, members, h, config.kernel);
    if (full.empty()) {
      have_conv = false;
      continue;
    }
    conv = solve_local_linear(x, data, full, h);
    have_conv = true;

    const auto split = split_neighborhood(x, conv.beta, data, members);
    w1 = kernel_weights(x, data, split.side1, h, config.kernel);
    w2 = kernel_weights(x, data, split.side2, h, config.kernel);
    ok1 = false;
    ok2 = false;
    if (!w1.empty()) {
      fit1 = solve_local_linear(x, data, w1, h);
      ok1 = supports_linear_fit(fit1, min_side);
    }
    if (!w2.empty()) {
      fit2 = solve_local_linear(x, data, w2, h);
      ok2 = supports_linear_fit(fit2, min_side);
    }
    if (ok1 && ok2) break;
  }

  est.bandwidth = h;
  est.k_used = k;

  if (!have_conv) {
    // every neighbour sits exactly on the kernel boundary; use their plain mean
    const auto nbrs = index.within(x, h);
    double s = 0.0;
    for (const auto& nb : nbrs) s += data.value(nb.index);
    const double mean = nbrs.empty() ? 0.0 : s / static_cast<double>(nbrs.size());
    est.m_hat_0 = est.m_hat_1 = est.m_hat_2 = est.m_hat = mean;
    est.degenerate = true;
    est.side = 2;
    return est;
  }

  est.m_hat_0 = conv.alpha;
  est.err_0 = conv.wrms;

  if (!ok1 && !ok2) {
    est.degenerate = true;
    est.m_hat_1 = est.m_hat_2 = est.m_hat = conv.alpha;
    est.err_1 = est.err_2 = conv.wrms;
    est.side = 2;
    est.jump_stat = 0.0;
    return est;
  }

  const auto resolve = [&](bool ok, const std::vector<WeightedPoint>& w, LocalFit& fit) {
    if (ok) return;
    est.degenerate = true;
    fit = w.empty() ? conv : anchored_mean_fit(x, data, w, conv.beta);
  };
  resolve(ok1, w1, fit1);
  resolve(ok2, w2, fit2);

  est.m_hat_1 = fit1.alpha;
  est.m_hat_2 = fit2.alpha;
  est.err_1 = fit1.wrms;
  est.err_2 = fit2.wrms;
  est.side = est.err_1 < est.err_2 ? 1 : 2;
  est.m_hat = est.side == 1 ? est.m_hat_1 : est.m_hat_2;
  const double diff = est.m_hat_1 - est.m_hat_2;
  est.jump_stat = diff * diff;
  return est;
}

EstimateField estimate_field(std::span<const double> flat_locations, const Dataset& data, const SpatialIndex& index,
                             const SmootherConfig& config) {
  const std::size_t p = data.dimension();
  if (flat_locations.size() % p != 0) {
    throw std::invalid_argument("location buffer length is not a multiple of the dimension");
  }
  EstimateField field;
  field.dimension = p;
  field.coords.assign(flat_locations.begin(), flat_locations.end());
  const std::size_t m = flat_locations.size() / p;
  field.estimates.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto x = flat_locations.subspan(i * p, p);
    try {
      field.estimates.push_back(estimate_point(x, data, index, config));
    } catch (const EmptyNeighborhood&) {
      PointEstimate fallback;
      fallback.degenerate = true;
      field.estimates.push_back(fallback);
    }
  }
  return field;
}

}  // namespace jumpdesign
