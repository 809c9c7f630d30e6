#include "jumpdesign/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "jumpdesign/random.hpp"

namespace jumpdesign {

std::size_t GridShape::index_of(double x, double y) const {
  if (!(x >= 0.0 && y >= 0.0)) return size();
  if (x != std::floor(x) || y != std::floor(y)) return size();
  const auto xi = static_cast<std::size_t>(x);
  const auto yi = static_cast<std::size_t>(y);
  if (xi >= width || yi >= height) return size();
  return index(xi, yi);
}

std::size_t Mask::count() const {
  return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(),
                                                [](std::uint8_t c) { return c != 0; }));
}

bool Box::contains(std::span<const double> x) const {
  if (x.size() != lo.size()) return false;
  for (std::size_t d = 0; d < x.size(); ++d) {
    if (!(x[d] >= lo[d] && x[d] <= hi[d])) return false;
  }
  return true;
}

double Box::diameter() const {
  double s = 0.0;
  for (std::size_t d = 0; d < lo.size(); ++d) s += (hi[d] - lo[d]) * (hi[d] - lo[d]);
  return std::sqrt(s);
}

Box Box::of_grid(const GridShape& shape) {
  if (shape.empty()) throw std::invalid_argument("grid must have positive width and height");
  return Box{{0.0, 0.0},
             {static_cast<double>(shape.width - 1), static_cast<double>(shape.height - 1)}};
}

namespace {

std::string format_coords(std::span<const double> c) {
  std::ostringstream out;
  out << '(';
  for (std::size_t d = 0; d < c.size(); ++d) out << (d ? ", " : "") << c[d];
  out << ')';
  return out.str();
}

}  // namespace

Dataset::Dataset(std::size_t dimension, Box bounds) : dim_(dimension), bounds_(std::move(bounds)) {
  if (dim_ == 0) throw std::invalid_argument("dataset dimension must be positive");
  if (bounds_.lo.size() != dim_ || bounds_.hi.size() != dim_) {
    throw std::invalid_argument("bounding box dimension does not match dataset dimension");
  }
  for (std::size_t d = 0; d < dim_; ++d) {
    if (!(bounds_.lo[d] <= bounds_.hi[d])) throw std::invalid_argument("bounding box is inverted");
  }
}

std::size_t Dataset::KeyHash::operator()(const std::vector<std::uint64_t>& key) const {
  std::uint64_t h = 0x84222325cbf29ce4ULL;
  for (auto k : key) h = mix64(h ^ k);
  return static_cast<std::size_t>(h);
}

std::vector<std::uint64_t> Dataset::key_of(std::span<const double> coords) const {
  std::vector<std::uint64_t> key(coords.size());
  for (std::size_t d = 0; d < coords.size(); ++d) {
    // +0.0 and -0.0 are the same location
    const double v = coords[d] == 0.0 ? 0.0 : coords[d];
    key[d] = std::bit_cast<std::uint64_t>(v);
  }
  return key;
}

std::optional<std::size_t> Dataset::find(std::span<const double> coords) const {
  if (coords.size() != dim_) return std::nullopt;
  auto it = by_coords_.find(key_of(coords));
  if (it == by_coords_.end()) return std::nullopt;
  return it->second;
}

void Dataset::check_insertable(std::span<const double> coords) const {
  if (coords.size() != dim_) {
    throw std::invalid_argument("observation has dimension " + std::to_string(coords.size()) +
                                ", dataset expects " + std::to_string(dim_));
  }
  for (double c : coords) {
    if (!std::isfinite(c)) throw std::invalid_argument("non-finite coordinate " + format_coords(coords));
  }
  if (!bounds_.contains(coords)) {
    throw std::invalid_argument("point " + format_coords(coords) + " lies outside the design space");
  }
  if (contains(coords)) {
    throw std::invalid_argument("duplicate design point " + format_coords(coords));
  }
}

std::size_t Dataset::insert(std::span<const double> coords, double value) {
  while (by_id_.count(next_id_)) ++next_id_;
  Observation obs{{Coords(coords.begin(), coords.end()), next_id_}, value};
  insert(obs);
  return obs.point.id;
}

void Dataset::insert(const Observation& obs) {
  check_insertable(obs.point.coords);
  if (!std::isfinite(obs.value)) {
    throw std::invalid_argument("non-finite value at " + format_coords(obs.point.coords));
  }
  if (by_id_.count(obs.point.id)) {
    throw std::invalid_argument("duplicate design point id " + std::to_string(obs.point.id));
  }
  const std::size_t row = values_.size();
  by_coords_.emplace(key_of(obs.point.coords), row);
  by_id_.emplace(obs.point.id, row);
  coords_.insert(coords_.end(), obs.point.coords.begin(), obs.point.coords.end());
  values_.push_back(obs.value);
  ids_.push_back(obs.point.id);
  next_id_ = std::max(next_id_, obs.point.id + 1);
}

void Dataset::insert_all(const std::vector<Observation>& obs) {
  for (const auto& o : obs) insert(o);
}

Observation Dataset::observation(std::size_t i) const {
  auto c = coords(i);
  return Observation{{Coords(c.begin(), c.end()), ids_[i]}, values_[i]};
}

std::vector<Observation> Dataset::observations() const {
  std::vector<Observation> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) out.push_back(observation(i));
  return out;
}

Image GroundTruth::render() const {
  if (!grid) throw std::logic_error("ground truth has no grid to render on");
  Image img(*grid);
  for (std::size_t i = 0; i < grid->size(); ++i) {
    const auto c = grid->coords(i);
    img.pixels[i] = eval(c);
  }
  return img;
}

double observe_at(const GroundTruth& truth, std::span<const double> coords, double sigma,
                  std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("noise sigma must be nonnegative");
  if (!truth.bounds.contains(coords)) {
    throw std::invalid_argument("cannot observe point " + format_coords(coords) +
                                ": outside the design space");
  }
  const double mean = truth.eval(coords);
  if (sigma == 0.0) return mean;
  std::uint64_t h = seed;
  for (double c : coords) h = derive_seed(h, std::bit_cast<std::uint64_t>(c == 0.0 ? 0.0 : c));
  std::mt19937_64 gen(h);
  std::normal_distribution<double> noise(0.0, sigma);
  return mean + noise(gen);
}

std::vector<Observation> observe(const GroundTruth& truth, const std::vector<DesignPoint>& points,
                                 double sigma, std::uint64_t seed) {
  std::vector<Observation> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back({p, observe_at(truth, p.coords, sigma, seed)});
  return out;
}

}  // namespace jumpdesign
