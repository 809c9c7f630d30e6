#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "jumpdesign/dataset.hpp"

namespace jumpdesign {

struct Neighbor {
  std::size_t index = 0;
  double distance = 0.0;
};

// Immutable k-d tree over a snapshot of point coordinates.
class SpatialIndex {
 public:
  SpatialIndex(std::span<const double> flat_coords, std::size_t dimension);
  explicit SpatialIndex(const Dataset& data);

  std::size_t size() const { return n_; }
  std::size_t dimension() const { return dim_; }
  std::span<const double> point(std::size_t i) const { return {coords_.data() + i * dim_, dim_}; }

  // min(k, size()) nearest points sorted by (distance, index).
  std::vector<Neighbor> knn(std::span<const double> x, std::size_t k) const;
  // All points with distance <= radius, sorted by (distance, index).
  std::vector<Neighbor> within(std::span<const double> x, double radius) const;

 private:
  struct Node {
    std::size_t begin = 0, end = 0;  // range in order_
    std::size_t left = 0, right = 0; // child node ids; 0 marks a leaf
    std::size_t axis = 0;
    double split = 0.0;
  };
  std::size_t build(std::size_t begin, std::size_t end);
  double sq_dist(std::span<const double> x, std::size_t i) const;

  std::size_t dim_;
  std::size_t n_;
  std::vector<double> coords_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
};

// Distance from x to its k-th nearest indexed point, the k-NN bandwidth
// h_n(x). An indexed point coinciding with x is not counted as a neighbour.
// Throws std::invalid_argument when fewer than k other points exist.
double knn_bandwidth(const SpatialIndex& index, std::span<const double> x, std::size_t k);

// max(p + 2, ceil(log_factor * ln n)), capped at n.
std::size_t default_neighbor_count(std::size_t n, std::size_t p, double log_factor = 3.0);

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point2&, const Point2&) = default;
};

struct Triangulation {
  std::vector<Point2> vertices;
  // Counter-clockwise vertex index triples.
  std::vector<std::array<std::size_t, 3>> triangles;
};

// Exact sign of the orientation determinant: > 0 when a, b, c turn
// counter-clockwise, 0 when collinear.
int orient2d(const Point2& a, const Point2& b, const Point2& c);
// Exact sign of the in-circle determinant for counter-clockwise a, b, c:
// > 0 when d lies strictly inside their circumcircle.
int incircle(const Point2& a, const Point2& b, const Point2& c, const Point2& d);

// Delaunay triangulation of distinct points. Points are inserted in
// lexicographic (x, y) order and edges are flipped only on a strict in-circle
// violation, so cocircular configurations resolve the same way every run.
// Throws std::invalid_argument on duplicate points or fewer than 3 points and
// DegenerateTriangulation when all points are collinear.
Triangulation delaunay_triangulate(std::span<const Point2> points);

class DegenerateTriangulation : public std::invalid_argument {
 public:
  DegenerateTriangulation() : std::invalid_argument("degenerate triangulation: all points are collinear") {}
};

// Vertex means of all Delaunay triangles of the given points (flat,
// row-major). Only dimension 2 is supported.
std::vector<Point2> delaunay_centroids(std::span<const double> flat_coords, std::size_t dimension);

}  // namespace jumpdesign
