#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "jumpdesign/spatial.hpp"

using namespace jumpdesign;

namespace {

std::vector<double> random_points(std::size_t n, std::size_t p, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> out(n * p);
  for (double& v : out) v = u(gen);
  return out;
}

std::vector<Neighbor> brute_knn(const std::vector<double>& pts, std::size_t p, std::span<const double> x,
                                std::size_t k) {
  std::vector<Neighbor> all;
  for (std::size_t i = 0; i < pts.size() / p; ++i) {
    double s = 0.0;
    for (std::size_t d = 0; d < p; ++d) s += (pts[i * p + d] - x[d]) * (pts[i * p + d] - x[d]);
    all.push_back({i, std::sqrt(s)});
  }
  std::sort(all.begin(), all.end(), [](const Neighbor& a, const Neighbor& b) {
    return a.distance < b.distance || (a.distance == b.distance && a.index < b.index);
  });
  all.resize(std::min(k, all.size()));
  return all;
}

double tri_area(const Point2& a, const Point2& b, const Point2& c) {
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x));
}

// Andrew monotone chain.
double hull_area(std::vector<Point2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Point2& a, const Point2& b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  std::vector<Point2> h;
  for (int pass = 0; pass < 2; ++pass) {
    const std::size_t base = h.size();
    for (const auto& p : pts) {
      while (h.size() >= base + 2 && tri_area(h[h.size() - 2], h.back(), p) <= 0) h.pop_back();
      h.push_back(p);
    }
    h.pop_back();
    std::reverse(pts.begin(), pts.end());
  }
  double a = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const auto& p = h[i];
    const auto& q = h[(i + 1) % h.size()];
    a += p.x * q.y - q.x * p.y;
  }
  return 0.5 * a;
}

// Long-double circumcircle test, used only where points are well separated.
bool strictly_inside_circumcircle(const Point2& a, const Point2& b, const Point2& c, const Point2& d) {
  const long double ax = a.x, ay = a.y, bx = b.x, by = b.y, cx = c.x, cy = c.y;
  const long double den = 2 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by));
  const long double ux = ((ax * ax + ay * ay) * (by - cy) + (bx * bx + by * by) * (cy - ay) + (cx * cx + cy * cy) * (ay - by)) / den;
  const long double uy = ((ax * ax + ay * ay) * (cx - bx) + (bx * bx + by * by) * (ax - cx) + (cx * cx + cy * cy) * (bx - ax)) / den;
  const long double r2 = (ax - ux) * (ax - ux) + (ay - uy) * (ay - uy);
  const long double d2 = (d.x - ux) * (d.x - ux) + (d.y - uy) * (d.y - uy);
  return d2 < r2 * (1 - 1e-12L);
}

void check_delaunay(const std::vector<Point2>& pts, const Triangulation& tri, bool exact_only) {
  for (const auto& t : tri.triangles) {
    const auto& a = pts[t[0]];
    const auto& b = pts[t[1]];
    const auto& c = pts[t[2]];
    REQUIRE(orient2d(a, b, c) > 0);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i == t[0] || i == t[1] || i == t[2]) continue;
      CHECK(incircle(a, b, c, pts[i]) <= 0);
      if (!exact_only) CHECK_FALSE(strictly_inside_circumcircle(a, b, c, pts[i]));
    }
  }
}

}  // namespace

TEST_CASE("knn matches a full sort") {
  for (std::size_t p : {1u, 2u, 3u}) {
    const auto pts = random_points(300, p, 40 + p);
    const SpatialIndex index(pts, p);
    const auto queries = random_points(25, p, 90 + p);
    for (std::size_t q = 0; q < 25; ++q) {
      const std::span<const double> x(queries.data() + q * p, p);
      for (std::size_t k : {1u, 7u, 50u, 300u, 400u}) {
        const auto got = index.knn(x, k);
        const auto want = brute_knn(pts, p, x, k);
        REQUIRE(got.size() == want.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
          CHECK(got[i].index == want[i].index);
          CHECK(got[i].distance == want[i].distance);
        }
      }
    }
  }
}

TEST_CASE("radius query matches a filtered sort") {
  const auto pts = random_points(500, 2, 5);
  const SpatialIndex index(pts, 2);
  const std::vector<double> x{0.4, 0.6};
  const auto got = index.within(x, 0.1);
  auto want = brute_knn(pts, 2, x, pts.size());
  want.erase(std::remove_if(want.begin(), want.end(), [](const Neighbor& n) { return n.distance > 0.1; }), want.end());
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i].index == want[i].index);
}

TEST_CASE("knn bandwidth excludes the query point itself") {
  const std::vector<double> line{0.0, 1.0, 2.0, 3.0};
  const SpatialIndex index(line, 1);
  CHECK(knn_bandwidth(index, std::vector<double>{0.0}, 2) == 2.0);
  CHECK(knn_bandwidth(index, std::vector<double>{0.5}, 2) == 0.5);
  CHECK(knn_bandwidth(index, std::vector<double>{10.0}, 4) == 10.0);
  CHECK_THROWS_AS(knn_bandwidth(index, std::vector<double>{0.0}, 4), std::invalid_argument);
}

TEST_CASE("knn bandwidth on a unit grid") {
  std::vector<double> grid;
  for (int y = 0; y < 100; ++y) {
    for (int x = 0; x < 100; ++x) {
      grid.push_back(x);
      grid.push_back(y);
    }
  }
  const SpatialIndex index(grid, 2);
  const double h = knn_bandwidth(index, std::vector<double>{50.0, 50.0}, 8);
  CHECK(h >= 1.0);
  CHECK(h <= 2.0);
  CHECK(h == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("default neighbour count") {
  CHECK(default_neighbor_count(10, 2) == 7);  // ceil(3 ln 10) = 7
  CHECK(default_neighbor_count(1000, 2) == 21);
  CHECK(default_neighbor_count(3, 2) == 3);   // capped at n
  CHECK(default_neighbor_count(2, 1) == 2);
}

TEST_CASE("three points make one triangle") {
  const std::vector<double> flat{0, 0, 3, 0, 0, 3};
  const auto c = delaunay_centroids(flat, 2);
  REQUIRE(c.size() == 1);
  CHECK(c[0].x == 1.0);
  CHECK(c[0].y == 1.0);
}

TEST_CASE("unit square splits along one diagonal") {
  const std::vector<double> flat{0, 0, 1, 0, 1, 1, 0, 1};
  auto c = delaunay_centroids(flat, 2);
  REQUIRE(c.size() == 2);
  std::sort(c.begin(), c.end(), [](const Point2& a, const Point2& b) { return a.x < b.x; });
  const bool diag_a = c[0] == Point2{1.0 / 3, 2.0 / 3} && c[1] == Point2{2.0 / 3, 1.0 / 3};
  const bool diag_b = std::abs(c[0].x - 1.0 / 3) < 1e-15 && std::abs(c[0].y - 1.0 / 3) < 1e-15 &&
                      std::abs(c[1].x - 2.0 / 3) < 1e-15 && std::abs(c[1].y - 2.0 / 3) < 1e-15;
  CHECK((diag_a || diag_b));
}

TEST_CASE("degenerate inputs are rejected") {
  CHECK_THROWS_AS(delaunay_centroids(std::vector<double>{0, 0, 1, 1, 2, 2, 3, 3}, 2), DegenerateTriangulation);
  CHECK_THROWS_WITH(delaunay_centroids(std::vector<double>{0, 0, 1, 1, 2, 2}, 2),
                    doctest::Contains("degenerate triangulation"));
  CHECK_THROWS_AS(delaunay_centroids(std::vector<double>{0, 0, 1, 1}, 2), std::invalid_argument);
  CHECK_THROWS_AS(delaunay_centroids(std::vector<double>{0, 0, 1, 0, 0, 1, 1, 0}, 2), std::invalid_argument);
  CHECK_THROWS_AS(delaunay_centroids(std::vector<double>{0, 0, 1, 0, 0, 1}, 3), std::invalid_argument);
}

TEST_CASE("random point sets satisfy the empty circumcircle property") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const std::size_t n = 3 + (seed * 37) % 198;
    const auto flat = random_points(n, 2, seed);
    std::vector<Point2> pts(n);
    for (std::size_t i = 0; i < n; ++i) pts[i] = {flat[2 * i], flat[2 * i + 1]};
    const auto tri = delaunay_triangulate(pts);
    check_delaunay(pts, tri, false);
    double area = 0.0;
    for (const auto& t : tri.triangles) area += tri_area(pts[t[0]], pts[t[1]], pts[t[2]]);
    CHECK(area == doctest::Approx(hull_area(pts)).epsilon(1e-9));
  }
}

TEST_CASE("integer grids with many cocircular quadruples") {
  std::vector<Point2> pts;
  for (int y = 0; y < 9; ++y) {
    for (int x = 0; x < 11; ++x) pts.push_back({static_cast<double>(x), static_cast<double>(y)});
  }
  std::shuffle(pts.begin(), pts.end(), std::mt19937_64(3));
  const auto tri = delaunay_triangulate(pts);
  CHECK(tri.triangles.size() == 2 * 10 * 8);
  check_delaunay(pts, tri, true);
  double area = 0.0;
  for (const auto& t : tri.triangles) area += tri_area(pts[t[0]], pts[t[1]], pts[t[2]]);
  CHECK(area == doctest::Approx(80.0));
  // same input, same output
  const auto again = delaunay_triangulate(pts);
  CHECK(again.triangles == tri.triangles);
}

TEST_CASE("centroids lie inside the hull and never hit a vertex") {
  const auto flat = random_points(50, 2, 77);
  std::vector<Point2> pts(50);
  for (std::size_t i = 0; i < 50; ++i) pts[i] = {flat[2 * i], flat[2 * i + 1]};
  const auto tri = delaunay_triangulate(pts);
  const auto cents = delaunay_centroids(flat, 2);
  REQUIRE(cents.size() == tri.triangles.size());
  std::set<std::pair<double, double>> verts;
  for (const auto& p : pts) verts.insert({p.x, p.y});
  for (std::size_t i = 0; i < cents.size(); ++i) {
    const auto& t = tri.triangles[i];
    const auto& c = cents[i];
    CHECK(orient2d(pts[t[0]], pts[t[1]], c) > 0);
    CHECK(orient2d(pts[t[1]], pts[t[2]], c) > 0);
    CHECK(orient2d(pts[t[2]], pts[t[0]], c) > 0);
    CHECK(verts.count({c.x, c.y}) == 0);
  }
}

TEST_CASE("near-degenerate predicates use exact arithmetic") {
  // points nearly on the line y = x, where the floating determinant is unreliable
  const Point2 a{0.5, 0.5};
  const Point2 b{12.0, 12.0};
  const Point2 c{24.0, 24.0};
  CHECK(orient2d(a, b, c) == 0);
  const Point2 c_up{24.0, std::nextafter(24.0, 25.0)};
  CHECK(orient2d(a, b, c_up) > 0);
  const Point2 c_down{24.0, std::nextafter(24.0, 23.0)};
  CHECK(orient2d(a, b, c_down) < 0);
  // exact cocircularity on the unit circle at axis points
  CHECK(incircle({1, 0}, {0, 1}, {-1, 0}, {0, -1}) == 0);
  CHECK(incircle({1, 0}, {0, 1}, {-1, 0}, {0, std::nextafter(-1.0, 0.0)}) > 0);
}
