#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "jumpdesign/dataset.hpp"
#include "jumpdesign/spatial.hpp"

namespace jumpdesign {

enum class KernelFamily { Epanechnikov, Triweight, Uniform };

KernelFamily parse_kernel_family(std::string_view name);
std::string_view kernel_family_name(KernelFamily family);

// Isotropic kernel supported on the unit ball, K(u) = c_p * (1 - |u|^2)^s with
// s = 1 (Epanechnikov), 3 (triweight) or 0 (uniform).
struct KernelSpec {
  KernelFamily family = KernelFamily::Epanechnikov;

  // (1 - u2)^s on u2 <= 1, zero outside. Enough for local fits, where the
  // constant cancels.
  double profile(double squared_norm) const;
  // c_p, chosen so the kernel integrates to one over R^p.
  double normalization(std::size_t p) const;
  // Normalized density value at u.
  double density(std::span<const double> u) const;
};

struct LocalFit {
  double alpha = 0.0;       // intercept, the estimate at the query point
  Coords beta;              // local gradient
  double wrms = 0.0;        // sum w r^2 / sum w
  double weight_sum = 0.0;
  std::size_t n_used = 0;   // points with positive weight
  bool rank_deficient = false;  // plain solve was singular, ridge applied
};

class EmptyNeighborhood : public std::runtime_error {
 public:
  EmptyNeighborhood() : std::runtime_error("empty neighborhood: no point has positive kernel weight") {}
};

// Kernel-weighted local linear least squares around x with weights
// K((x_i - x) / h) over every point of data. Throws std::invalid_argument for
// h <= 0 and EmptyNeighborhood when all weights vanish.
LocalFit fit_local_linear(std::span<const double> x, const Dataset& data, double h, const KernelSpec& kernel);
// Same, restricted to the listed dataset rows.
LocalFit fit_local_linear(std::span<const double> x, const Dataset& data, std::span<const std::size_t> members,
                          double h, const KernelSpec& kernel);

struct NeighborhoodSplit {
  std::vector<std::size_t> side1;  // beta0 . (x_i - x) >= 0
  std::vector<std::size_t> side2;
  bool axis_fallback = false;      // |beta0| was negligible, split on the first axis
};

NeighborhoodSplit split_neighborhood(std::span<const double> x, std::span<const double> beta0, const Dataset& data,
                                     std::span<const std::size_t> members);

struct SmootherConfig {
  KernelSpec kernel;
  std::optional<std::size_t> k;  // fixed neighbour count; default rule when unset
  double k_log_factor = 3.0;
  std::size_t max_doublings = 3;
  // Fewest positively weighted points a side needs for its linear fit to
  // count as usable; 0 means 2(p + 1), leaving p + 1 residual degrees of
  // freedom. Never below p + 1.
  std::size_t min_side_points = 0;

  std::size_t neighbor_count(std::size_t n, std::size_t p) const;
};

struct PointEstimate {
  double m_hat_0 = 0.0;  // conventional local linear estimate
  double err_0 = 0.0;    // its weighted residual mean square (WRMS-C)
  double m_hat_1 = 0.0;
  double m_hat_2 = 0.0;
  double err_1 = 0.0;
  double err_2 = 0.0;
  double m_hat = 0.0;    // the one-sided estimate with the smaller error
  double jump_stat = 0.0;  // (m_hat_1 - m_hat_2)^2
  int side = 2;
  bool degenerate = false;
  double bandwidth = 0.0;
  std::size_t k_used = 0;
};

// Jump-preserving estimate at x: k-NN bandwidth, conventional fit for the
// gradient direction, a split of the neighbourhood by the hyperplane through
// x normal to that gradient, and one local linear fit per side. When a side
// has too few points (min_side_points) or a singular design, k is doubled (up
// to max_doublings). A side that still falls short fits only its intercept,
// with the slope held at the conventional gradient; an empty side uses the
// conventional fit. Requires at least 2(p + 1) observations.
PointEstimate estimate_point(std::span<const double> x, const Dataset& data, const SpatialIndex& index,
                             const SmootherConfig& config);

struct EstimateField {
  std::size_t dimension = 0;
  std::vector<double> coords;  // row-major query locations
  std::vector<PointEstimate> estimates;

  std::size_t size() const { return estimates.size(); }
  std::span<const double> location(std::size_t i) const { return {coords.data() + i * dimension, dimension}; }
};

EstimateField estimate_field(std::span<const double> flat_locations, const Dataset& data, const SpatialIndex& index,
                             const SmootherConfig& config);

}  // namespace jumpdesign
