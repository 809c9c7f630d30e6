#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "jumpdesign/evaluation.hpp"
#include "jumpdesign/synthetic.hpp"

using namespace jumpdesign;

namespace {

Mask vertical_line(GridShape g, std::size_t column) {
  Mask m(g);
  for (std::size_t y = 0; y < g.height; ++y) m.set(g.index(column, y));
  return m;
}

// Field holding value(x, y) at every unsampled pixel.
EstimateField field_from(const Mask& sampled, const std::function<double(double, double)>& value) {
  EstimateField f;
  f.dimension = 2;
  for (std::size_t i = 0; i < sampled.shape.size(); ++i) {
    if (sampled.test(i)) continue;
    const auto c = sampled.shape.coords(i);
    f.coords.insert(f.coords.end(), c.begin(), c.end());
    PointEstimate e;
    e.m_hat = value(c[0], c[1]);
    f.estimates.push_back(e);
  }
  return f;
}

GroundTruth ramp_truth(GridShape g) {
  GroundTruth t;
  t.bounds = Box::of_grid(g);
  t.grid = g;
  t.eval = [](std::span<const double> x) { return 0.1 * x[0] + 0.01 * x[1]; };
  t.jump_mask = Mask(g);
  return t;
}

}  // namespace

TEST_CASE("jump band of a vertical line") {
  const GridShape g{41, 7};
  const Mask line = vertical_line(g, 20);
  CHECK(jump_band(line, 0.0).cells == line.cells);
  const Mask band = jump_band(line, 6.0);
  for (std::size_t y = 0; y < g.height; ++y) {
    for (std::size_t x = 0; x < g.width; ++x) {
      CHECK(band.test(g.index(x, y)) == (x >= 14 && x <= 26));
    }
  }
  CHECK(band.count() == 13 * g.height);
  CHECK(jump_band(line, 100.0).count() == g.size());
  CHECK_FALSE(jump_band(Mask(g), 6.0).any());
  CHECK_THROWS(jump_band(line, -1.0));
}

TEST_CASE("jump band matches brute-force distances") {
  const GridShape g{30, 25};
  Mask m(g);
  std::mt19937_64 gen(3);
  for (int i = 0; i < 12; ++i) m.set(gen() % g.size());
  for (double h : {0.0, 1.0, 1.5, 2.9, 4.0, 7.3}) {
    const Mask band = jump_band(m, h);
    for (std::size_t i = 0; i < g.size(); ++i) {
      double best = 1e300;
      for (std::size_t j = 0; j < g.size(); ++j) {
        if (!m.test(j)) continue;
        const double dx = static_cast<double>(g.x_of(i)) - static_cast<double>(g.x_of(j));
        const double dy = static_cast<double>(g.y_of(i)) - static_cast<double>(g.y_of(j));
        best = std::min(best, std::sqrt(dx * dx + dy * dy));
      }
      CHECK(band.test(i) == (best <= h));
    }
  }
}

TEST_CASE("jump band grows with h") {
  const auto truth = make_synthetic(synthetic_preset("image1"));
  Mask prev = jump_band(truth.jump_mask, 0.0);
  for (double h = 0.5; h <= 8.0; h += 0.5) {
    const Mask next = jump_band(truth.jump_mask, h);
    for (std::size_t i = 0; i < next.cells.size(); ++i) {
      if (prev.test(i)) CHECK(next.test(i));
    }
    CHECK(next.count() >= prev.count());
    prev = next;
  }
}

TEST_CASE("perfect and offset reconstructions") {
  const GridShape g{20, 10};
  const auto truth = ramp_truth(g);
  Mask sampled(g);
  for (std::size_t i = 0; i < g.size(); i += 7) sampled.set(i);
  const Mask band = jump_band(vertical_line(g, 5), 2.0);
  const auto exact = compute_mse(field_from(sampled, [](double x, double y) { return 0.1 * x + 0.01 * y; }), truth,
                                 band, sampled);
  CHECK(*exact.j_mse == 0.0);
  CHECK(*exact.c_mse == 0.0);
  CHECK(exact.n_jb + exact.n_cont == g.size() - sampled.count());
  const auto off = compute_mse(field_from(sampled, [](double x, double y) { return 0.1 * x + 0.01 * y + 0.1; }),
                               truth, band, sampled);
  CHECK(*off.j_mse == doctest::Approx(0.01));
  CHECK(*off.c_mse == doctest::Approx(0.01));
}

TEST_CASE("hand-built 5x5 example") {
  // truth 0 everywhere; band = column 2; sampled = the four corners
  const GridShape g{5, 5};
  GroundTruth truth;
  truth.bounds = Box::of_grid(g);
  truth.grid = g;
  truth.eval = [](std::span<const double>) { return 0.0; };
  Mask sampled(g);
  for (std::size_t i : {0u, 4u, 20u, 24u}) sampled.set(i);
  const Mask band = vertical_line(g, 2);
  // estimate = x + y at each unsampled pixel
  const auto r = compute_mse(field_from(sampled, [](double x, double y) { return x + y; }), truth, band, sampled);
  // band pixels (2, y), y = 0..4: squared errors 4, 9, 16, 25, 36 -> 90 / 5
  CHECK(r.n_jb == 5);
  CHECK(*r.j_mse == doctest::Approx(18.0));
  // everything else: sum over all pixels of (x + y)^2 is 500; minus band 90,
  // minus corners 0 + 16 + 16 + 64 = 96 -> 314 over 16 pixels
  CHECK(r.n_cont == 16);
  CHECK(*r.c_mse == doctest::Approx(314.0 / 16.0));
}

TEST_CASE("metrics do not depend on field order") {
  const GridShape g{15, 15};
  const auto truth = ramp_truth(g);
  Mask sampled(g);
  for (std::size_t i = 3; i < g.size(); i += 5) sampled.set(i);
  EstimateField f = field_from(sampled, [](double x, double y) { return std::sin(x) * std::cos(y); });
  const Mask band = jump_band(vertical_line(g, 7), 3.0);
  const auto a = compute_mse(f, truth, band, sampled);
  std::mt19937_64 gen(1);
  std::vector<std::size_t> perm(f.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), gen);
  EstimateField p;
  p.dimension = 2;
  for (auto i : perm) {
    p.coords.push_back(f.coords[2 * i]);
    p.coords.push_back(f.coords[2 * i + 1]);
    p.estimates.push_back(f.estimates[i]);
  }
  const auto b = compute_mse(p, truth, band, sampled);
  CHECK(*a.j_mse == doctest::Approx(*b.j_mse).epsilon(1e-12));
  CHECK(*a.c_mse == doctest::Approx(*b.c_mse).epsilon(1e-12));
}

TEST_CASE("empty cells are not applicable and missing pixels are errors") {
  const GridShape g{6, 6};
  const auto truth = ramp_truth(g);
  Mask sampled(g);
  const auto r = compute_mse(field_from(sampled, [](double, double) { return 0.0; }), truth, Mask(g), sampled);
  CHECK_FALSE(r.j_mse.has_value());
  CHECK(r.c_mse.has_value());
  EstimateField partial = field_from(sampled, [](double, double) { return 0.0; });
  partial.estimates.pop_back();
  partial.coords.resize(partial.coords.size() - 2);
  CHECK_THROWS_AS(compute_mse(partial, truth, Mask(g), sampled), std::invalid_argument);
}

TEST_CASE("curve helpers") {
  const auto c = normalize_curve(std::vector<double>{1, 3});
  CHECK(c[0] == 0.25);
  bool flat = false;
  const auto z = normalize_curve(std::vector<double>{0, 0, 0}, &flat);
  CHECK(flat);
  CHECK(z[1] == doctest::Approx(1.0 / 3));
  CHECK(total_variation(std::vector<double>{1, 0}, std::vector<double>{0, 1}) == 1.0);
  const auto t = middle_row_transect({7, 5});
  CHECK(t.size() == 14);
  CHECK(t[1] == 2.0);
  CHECK(t[12] == 6.0);
}

TEST_CASE("profile curves on a constant surface are uniform") {
  const auto truth = make_synthetic(synthetic_preset("flat", GridShape{31, 31}));
  Dataset d(2, truth.bounds);
  for (std::size_t y = 0; y < 31; y += 2) {
    for (std::size_t x = 0; x < 31; x += 2) {
      const std::vector<double> c{static_cast<double>(x), static_cast<double>(y)};
      d.insert(c, truth.eval(c));
    }
  }
  // a fixed KDE bandwidth wider than the grid makes the design density flat
  // enough along the transect that only the statistic could shape the curve
  SamplerSpec spec;
  spec.kde_rule = KdeBandwidthRule::Fixed;
  spec.kde_bandwidth = 1e6;
  const auto transect = middle_row_transect(*truth.grid);
  const auto table = pmf_vs_error_profile(truth, d, transect, SmootherConfig{}, spec);
  REQUIRE(table.rows.size() == 31);
  double sums[4] = {0, 0, 0, 0};
  for (const auto& r : table.rows) {
    CHECK(r.error == doctest::Approx(1.0 / 31));
    CHECK(r.proposed == doctest::Approx(1.0 / 31).epsilon(1e-6));
    CHECK(r.wrms_c == doctest::Approx(1.0 / 31));
    CHECK(r.wrms_j == doctest::Approx(1.0 / 31));
    sums[0] += r.error;
    sums[1] += r.proposed;
    sums[2] += r.wrms_c;
    sums[3] += r.wrms_j;
  }
  for (double s : sums) CHECK(std::abs(s - 1.0) <= 1e-12);
  CHECK(table.warnings.size() == 3);  // error, wrms-c and wrms-j are identically zero
}

TEST_CASE("profile rejects off-grid transects") {
  const auto truth = make_synthetic(synthetic_preset("flat", GridShape{11, 11}));
  Dataset d(2, truth.bounds);
  for (std::size_t i = 0; i < 121; i += 2) d.insert(truth.grid->coords(i), 0.5);
  CHECK_THROWS(pmf_vs_error_profile(truth, d, std::vector<double>{0.5, 3.0}, SmootherConfig{}));
}
