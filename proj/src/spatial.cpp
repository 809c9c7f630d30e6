#include "jumpdesign/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>
#include <string>

namespace jumpdesign {

namespace {

constexpr std::size_t kLeafSize = 12;

bool closer(const Neighbor& a, const Neighbor& b) {
  return a.distance < b.distance || (a.distance == b.distance && a.index < b.index);
}

}  // namespace

SpatialIndex::SpatialIndex(std::span<const double> flat_coords, std::size_t dimension)
    : dim_(dimension), n_(dimension ? flat_coords.size() / dimension : 0),
      coords_(flat_coords.begin(), flat_coords.end()) {
  if (dim_ == 0) throw std::invalid_argument("spatial index dimension must be positive");
  if (flat_coords.size() % dim_ != 0) {
    throw std::invalid_argument("coordinate buffer length is not a multiple of the dimension");
  }
  order_.resize(n_);
  for (std::size_t i = 0; i < n_; ++i) order_[i] = i;
  nodes_.reserve(2 * (n_ / kLeafSize + 1));
  nodes_.push_back({});  // root placeholder so that 0 can mean "no child"
  if (n_ > 0) {
    const std::size_t root = build(0, n_);
    nodes_[0] = nodes_[root];
  }
}

SpatialIndex::SpatialIndex(const Dataset& data) : SpatialIndex(data.flat_coords(), data.dimension()) {}

std::size_t SpatialIndex::build(std::size_t begin, std::size_t end) {
  Node node;
  node.begin = begin;
  node.end = end;
  if (end - begin > kLeafSize) {
    std::size_t best_axis = 0;
    double best_spread = -1.0;
    for (std::size_t d = 0; d < dim_; ++d) {
      double lo = coords_[order_[begin] * dim_ + d];
      double hi = lo;
      for (std::size_t i = begin + 1; i < end; ++i) {
        const double v = coords_[order_[i] * dim_ + d];
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      if (hi - lo > best_spread) {
        best_spread = hi - lo;
        best_axis = d;
      }
    }
    if (best_spread > 0.0) {
      const std::size_t mid = begin + (end - begin) / 2;
      std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                       order_.begin() + static_cast<std::ptrdiff_t>(mid),
                       order_.begin() + static_cast<std::ptrdiff_t>(end),
                       [&](std::size_t a, std::size_t b) {
                         return coords_[a * dim_ + best_axis] < coords_[b * dim_ + best_axis];
                       });
      node.axis = best_axis;
      node.split = coords_[order_[mid] * dim_ + best_axis];
      node.left = build(begin, mid);
      node.right = build(mid, end);
    }
  }
  nodes_.push_back(node);
  return nodes_.size() - 1;
}

double SpatialIndex::sq_dist(std::span<const double> x, std::size_t i) const {
  const double* p = coords_.data() + i * dim_;
  double s = 0.0;
  for (std::size_t d = 0; d < dim_; ++d) {
    const double diff = x[d] - p[d];
    s += diff * diff;
  }
  return s;
}

std::vector<Neighbor> SpatialIndex::knn(std::span<const double> x, std::size_t k) const {
  if (x.size() != dim_) throw std::invalid_argument("query dimension does not match the index");
  k = std::min(k, n_);
  std::vector<Neighbor> out;
  if (k == 0) return out;

  // max-heap on (distance, index): the top is the current worst kept point
  std::priority_queue<Neighbor, std::vector<Neighbor>, decltype(&closer)> heap(&closer);
  auto visit = [&](auto&& self, std::size_t id) -> void {
    const Node& node = nodes_[id];
    if (node.left == 0) {
      for (std::size_t i = node.begin; i < node.end; ++i) {
        const Neighbor cand{order_[i], std::sqrt(sq_dist(x, order_[i]))};
        if (heap.size() < k) {
          heap.push(cand);
        } else if (closer(cand, heap.top())) {
          heap.pop();
          heap.push(cand);
        }
      }
      return;
    }
    const double diff = x[node.axis] - node.split;
    const std::size_t near = diff < 0.0 ? node.left : node.right;
    const std::size_t far = diff < 0.0 ? node.right : node.left;
    self(self, near);
    if (heap.size() < k || std::abs(diff) <= heap.top().distance) self(self, far);
  };
  visit(visit, 0);

  out.reserve(heap.size());
  while (!heap.empty()) {
    out.push_back(heap.top());
    heap.pop();
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::vector<Neighbor> SpatialIndex::within(std::span<const double> x, double radius) const {
  if (x.size() != dim_) throw std::invalid_argument("query dimension does not match the index");
  std::vector<Neighbor> out;
  if (n_ == 0 || !(radius >= 0.0)) return out;
  const double slack = radius * (1.0 + 1e-12);
  auto visit = [&](auto&& self, std::size_t id) -> void {
    const Node& node = nodes_[id];
    if (node.left == 0) {
      for (std::size_t i = node.begin; i < node.end; ++i) {
        const double d = std::sqrt(sq_dist(x, order_[i]));
        if (d <= radius) out.push_back({order_[i], d});
      }
      return;
    }
    const double diff = x[node.axis] - node.split;
    if (diff <= slack) self(self, node.left);
    if (diff >= -slack) self(self, node.right);
  };
  visit(visit, 0);
  std::sort(out.begin(), out.end(), closer);
  return out;
}

double knn_bandwidth(const SpatialIndex& index, std::span<const double> x, std::size_t k) {
  if (k == 0) throw std::invalid_argument("k must be positive");
  if (index.size() == 0) throw std::invalid_argument("cannot compute a bandwidth on an empty index");
  auto nn = index.knn(x, k + 1);
  if (!nn.empty() && nn.front().distance == 0.0) nn.erase(nn.begin());
  if (nn.size() < k) {
    throw std::invalid_argument("k = " + std::to_string(k) + " exceeds the " + std::to_string(nn.size()) +
                                " available neighbours; reduce k or add design points");
  }
  return nn[k - 1].distance;
}

std::size_t default_neighbor_count(std::size_t n, std::size_t p, double log_factor) {
  std::size_t k = p + 2;
  if (n > 1) {
    k = std::max(k, static_cast<std::size_t>(std::ceil(log_factor * std::log(static_cast<double>(n)))));
  }
  return std::min(k, n);
}

}  // namespace jumpdesign
