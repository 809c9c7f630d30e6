#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <boost/multiprecision/cpp_int.hpp>

#include "jumpdesign/spatial.hpp"

namespace jumpdesign {

namespace {

using Rational = boost::multiprecision::cpp_rational;

constexpr double kEps = 1.1102230246251565e-16;  // 2^-53
constexpr double kOrientBound = (3.0 + 16.0 * kEps) * kEps;
constexpr double kInCircleBound = (10.0 + 96.0 * kEps) * kEps;

template <typename T>
int sign_of(const T& v) {
  return v > 0 ? 1 : (v < 0 ? -1 : 0);
}

int orient_exact(const Point2& a, const Point2& b, const Point2& c) {
  const Rational ax(a.x), ay(a.y), bx(b.x), by(b.y), cx(c.x), cy(c.y);
  return sign_of((bx - ax) * (cy - ay) - (by - ay) * (cx - ax));
}

int incircle_exact(const Point2& a, const Point2& b, const Point2& c, const Point2& d) {
  const Rational dx(d.x), dy(d.y);
  const Rational adx = Rational(a.x) - dx, ady = Rational(a.y) - dy;
  const Rational bdx = Rational(b.x) - dx, bdy = Rational(b.y) - dy;
  const Rational cdx = Rational(c.x) - dx, cdy = Rational(c.y) - dy;
  const Rational alift = adx * adx + ady * ady;
  const Rational blift = bdx * bdx + bdy * bdy;
  const Rational clift = cdx * cdx + cdy * cdy;
  const Rational det = alift * (bdx * cdy - cdx * bdy) + blift * (cdx * ady - adx * cdy) +
                       clift * (adx * bdy - bdx * ady);
  return sign_of(det);
}

constexpr std::size_t kNone = static_cast<std::size_t>(-1);

// Sweep-hull incremental construction with Lawson flips, stored as half-edges:
// half-edge e belongs to triangle e / 3 and runs from vertex start_[e] to the
// start of the next half-edge of that triangle.
class Builder {
 public:
  explicit Builder(std::span<const Point2> pts) : pts_(pts) {}

  Triangulation run() {
    const std::size_t n = pts_.size();
    if (n < 3) throw std::invalid_argument("Delaunay triangulation needs at least 3 points");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const auto& p = pts_[a];
      const auto& q = pts_[b];
      return p.x < q.x || (p.x == q.x && (p.y < q.y || (p.y == q.y && a < b)));
    });
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(pts_[order[i]].x) || !std::isfinite(pts_[order[i]].y)) {
        throw std::invalid_argument("non-finite point in Delaunay input");
      }
      if (i > 0 && pts_[order[i]] == pts_[order[i - 1]]) {
        throw std::invalid_argument("duplicate point in Delaunay input");
      }
    }

    std::size_t m = 2;
    while (m < n && orient2d(pts_[order[0]], pts_[order[1]], pts_[order[m]]) == 0) ++m;
    if (m == n) throw DegenerateTriangulation();

    hull_next_.assign(n, kNone);
    hull_prev_.assign(n, kNone);
    hull_edge_.assign(n, kNone);
    seed_fan(order, m);
    for (std::size_t i = m + 1; i < n; ++i) insert_outside(order[i]);

    Triangulation out;
    out.vertices.assign(pts_.begin(), pts_.end());
    out.triangles.reserve(start_.size() / 3);
    for (std::size_t t = 0; t < start_.size() / 3; ++t) {
      out.triangles.push_back({start_[3 * t], start_[3 * t + 1], start_[3 * t + 2]});
    }
    return out;
  }

 private:
  static std::size_t next_in_tri(std::size_t e) { return e - e % 3 + (e + 1) % 3; }
  static std::size_t prev_in_tri(std::size_t e) { return e - e % 3 + (e + 2) % 3; }

  std::size_t add_triangle(std::size_t a, std::size_t b, std::size_t c) {
    const std::size_t t = start_.size();
    start_.insert(start_.end(), {a, b, c});
    twin_.insert(twin_.end(), {kNone, kNone, kNone});
    return t;
  }

  void link(std::size_t a, std::size_t b) {
    if (a != kNone) twin_[a] = b;
    if (b != kNone) twin_[b] = a;
  }

  void seed_fan(const std::vector<std::size_t>& order, std::size_t m) {
    const std::size_t q = order[m];
    const bool left = orient2d(pts_[order[0]], pts_[order[1]], pts_[q]) > 0;
    std::size_t prev_tri = kNone;
    for (std::size_t j = 0; j + 1 < m; ++j) {
      const std::size_t s0 = order[j];
      const std::size_t s1 = order[j + 1];
      const std::size_t t = left ? add_triangle(s0, s1, q) : add_triangle(s1, s0, q);
      if (prev_tri != kNone) {
        // shared edge q - s0 with the previous fan triangle
        if (left) {
          link(prev_tri + 1, t + 2);
        } else {
          link(prev_tri + 2, t + 1);
        }
      }
      prev_tri = t;
      if (left) {
        set_hull(s0, s1, t);
      } else {
        set_hull(s1, s0, t);
      }
    }
    const std::size_t first = 0;
    const std::size_t last = prev_tri;
    const std::size_t s_first = order[0];
    const std::size_t s_last = order[m - 1];
    if (left) {
      set_hull(s_last, q, last + 1);
      set_hull(q, s_first, first + 2);
    } else {
      set_hull(s_first, q, first + 1);
      set_hull(q, s_last, last + 2);
    }
    last_inserted_ = q;
  }

  void set_hull(std::size_t from, std::size_t to, std::size_t halfedge) {
    hull_next_[from] = to;
    hull_prev_[to] = from;
    hull_edge_[from] = halfedge;
  }

  bool visible(std::size_t from, std::size_t p) const {
    return orient2d(pts_[from], pts_[hull_next_[from]], pts_[p]) < 0;
  }

  void insert_outside(std::size_t p) {
    // locate the first vertex of the visible hull chain
    std::size_t s = last_inserted_;
    std::size_t guard = 0;
    while (!(visible(s, p) && !visible(hull_prev_[s], p))) {
      s = hull_next_[s];
      if (++guard > pts_.size() + 1) throw std::logic_error("Delaunay sweep lost the visible hull chain");
    }

    std::size_t a = s;
    std::size_t prev_tri = kNone;
    std::size_t first_tri = kNone;
    std::vector<std::size_t> suspects;
    while (visible(a, p)) {
      const std::size_t b = hull_next_[a];
      const std::size_t t = add_triangle(b, a, p);
      link(t, hull_edge_[a]);
      if (prev_tri != kNone) link(prev_tri + 2, t + 1);  // shared edge p - a
      if (first_tri == kNone) first_tri = t;
      suspects.push_back(t);
      prev_tri = t;
      if (a != s) {
        hull_next_[a] = kNone;
        hull_prev_[a] = kNone;
        hull_edge_[a] = kNone;
      }
      a = b;
    }
    const std::size_t end = a;
    set_hull(s, p, first_tri + 1);
    set_hull(p, end, prev_tri + 2);
    last_inserted_ = p;

    for (std::size_t e : suspects) legalize(e);
  }

  void legalize(std::size_t edge) {
    std::vector<std::size_t> stack{edge};
    while (!stack.empty()) {
      const std::size_t a = stack.back();
      stack.pop_back();
      const std::size_t b = twin_[a];
      if (b == kNone) continue;

      const std::size_t al = next_in_tri(a);
      const std::size_t ar = prev_in_tri(a);
      const std::size_t bl = prev_in_tri(b);
      const std::size_t br = next_in_tri(b);

      const std::size_t p0 = start_[ar];
      const std::size_t pr = start_[a];
      const std::size_t pl = start_[al];
      const std::size_t p1 = start_[bl];
      if (incircle(pts_[p0], pts_[pr], pts_[pl], pts_[p1]) <= 0) continue;

      start_[a] = p1;
      start_[b] = p0;
      const std::size_t hbl = twin_[bl];
      const std::size_t har = twin_[ar];
      link(a, hbl);
      link(b, har);
      link(ar, bl);
      if (hbl == kNone) hull_edge_[p1] = a;
      if (har == kNone) hull_edge_[p0] = b;

      stack.push_back(a);
      stack.push_back(br);
    }
  }

  std::span<const Point2> pts_;
  std::vector<std::size_t> start_;
  std::vector<std::size_t> twin_;
  std::vector<std::size_t> hull_next_;
  std::vector<std::size_t> hull_prev_;
  std::vector<std::size_t> hull_edge_;  // half-edge running from v to hull_next_[v]
  std::size_t last_inserted_ = kNone;
};

}  // namespace

int orient2d(const Point2& a, const Point2& b, const Point2& c) {
  const double left = (b.x - a.x) * (c.y - a.y);
  const double right = (b.y - a.y) * (c.x - a.x);
  const double det = left - right;
  const double bound = kOrientBound * (std::abs(left) + std::abs(right));
  if (det > bound || -det > bound) return sign_of(det);
  return orient_exact(a, b, c);
}

int incircle(const Point2& a, const Point2& b, const Point2& c, const Point2& d) {
  const double adx = a.x - d.x, ady = a.y - d.y;
  const double bdx = b.x - d.x, bdy = b.y - d.y;
  const double cdx = c.x - d.x, cdy = c.y - d.y;
  const double bdxcdy = bdx * cdy, cdxbdy = cdx * bdy;
  const double cdxady = cdx * ady, adxcdy = adx * cdy;
  const double adxbdy = adx * bdy, bdxady = bdx * ady;
  const double alift = adx * adx + ady * ady;
  const double blift = bdx * bdx + bdy * bdy;
  const double clift = cdx * cdx + cdy * cdy;
  const double det = alift * (bdxcdy - cdxbdy) + blift * (cdxady - adxcdy) + clift * (adxbdy - bdxady);
  const double permanent = (std::abs(bdxcdy) + std::abs(cdxbdy)) * alift +
                           (std::abs(cdxady) + std::abs(adxcdy)) * blift +
                           (std::abs(adxbdy) + std::abs(bdxady)) * clift;
  const double bound = kInCircleBound * permanent;
  if (det > bound || -det > bound) return sign_of(det);
  return incircle_exact(a, b, c, d);
}

Triangulation delaunay_triangulate(std::span<const Point2> points) { return Builder(points).run(); }

std::vector<Point2> delaunay_centroids(std::span<const double> flat_coords, std::size_t dimension) {
  if (dimension != 2) {
    throw std::invalid_argument("Delaunay candidates are only supported in 2 dimensions (got " +
                                std::to_string(dimension) + ")");
  }
  std::vector<Point2> pts(flat_coords.size() / 2);
  for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = {flat_coords[2 * i], flat_coords[2 * i + 1]};
  const auto tri = delaunay_triangulate(pts);
  std::vector<Point2> out;
  out.reserve(tri.triangles.size());
  for (const auto& t : tri.triangles) {
    const auto& a = pts[t[0]];
    const auto& b = pts[t[1]];
    const auto& c = pts[t[2]];
    out.push_back({(a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0});
  }
  return out;
}

}  // namespace jumpdesign
