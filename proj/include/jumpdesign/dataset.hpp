#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "jumpdesign/grid.hpp"

namespace jumpdesign {

using Coords = std::vector<double>;

// Axis-aligned box over the design space.
struct Box {
  Coords lo;
  Coords hi;

  std::size_t dimension() const { return lo.size(); }
  bool contains(std::span<const double> x) const;
  double diameter() const;

  static Box of_grid(const GridShape& shape);
};

struct DesignPoint {
  Coords coords;
  std::size_t id = 0;
};

struct Observation {
  DesignPoint point;
  double value = 0.0;
};

// Accumulating design/observation set. Coordinates are stored row-major in a
// flat buffer; index i addresses the i-th inserted observation.
class Dataset {
 public:
  Dataset(std::size_t dimension, Box bounds);

  std::size_t dimension() const { return dim_; }
  const Box& bounds() const { return bounds_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  std::span<const double> coords(std::size_t i) const {
    return {coords_.data() + i * dim_, dim_};
  }
  std::span<const double> flat_coords() const { return coords_; }
  double value(std::size_t i) const { return values_[i]; }
  std::span<const double> values() const { return values_; }
  std::size_t id(std::size_t i) const { return ids_[i]; }

  // Index of the observation at exactly these coordinates, if any.
  std::optional<std::size_t> find(std::span<const double> coords) const;
  bool contains(std::span<const double> coords) const { return find(coords).has_value(); }

  // Inserts a new observation with the next free id and returns that id.
  // Throws std::invalid_argument for out-of-bounds or duplicate coordinates;
  // the dataset is unchanged on failure.
  std::size_t insert(std::span<const double> coords, double value);
  // Inserts with a caller-chosen id; duplicate ids are rejected as well.
  void insert(const Observation& obs);
  void insert_all(const std::vector<Observation>& obs);

  Observation observation(std::size_t i) const;
  std::vector<Observation> observations() const;

 private:
  struct KeyHash {
    std::size_t operator()(const std::vector<std::uint64_t>& key) const;
  };
  std::vector<std::uint64_t> key_of(std::span<const double> coords) const;
  void check_insertable(std::span<const double> coords) const;

  std::size_t dim_;
  Box bounds_;
  std::vector<double> coords_;
  std::vector<double> values_;
  std::vector<std::size_t> ids_;
  std::size_t next_id_ = 0;
  std::unordered_map<std::vector<std::uint64_t>, std::size_t, KeyHash> by_coords_;
  std::unordered_map<std::size_t, std::size_t> by_id_;
};

// The true regression surface m(x) together with what is known about its jump
// location curves. eval must be defined everywhere inside bounds.
struct GroundTruth {
  std::function<double(std::span<const double>)> eval;
  Box bounds;
  std::optional<GridShape> grid;
  // Grid cells lying on a jump location curve; all-zero when the surface has
  // no jumps. Only meaningful when grid is set.
  Mask jump_mask;
  double noise_sigma = 0.0;

  // Evaluates the surface at every pixel center of grid.
  Image render() const;
};

// Y = m(x) + eps with eps ~ N(0, sigma^2). The noise realisation at a point is
// a function of (seed, coords) only, so observing a point alone or as part of
// a larger batch yields the same value.
std::vector<Observation> observe(const GroundTruth& truth, const std::vector<DesignPoint>& points,
                                 double sigma, std::uint64_t seed);

// Single-point form of observe().
double observe_at(const GroundTruth& truth, std::span<const double> coords, double sigma,
                  std::uint64_t seed);

}  // namespace jumpdesign
