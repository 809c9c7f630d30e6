#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <vector>

#include "jumpdesign/design.hpp"
#include "jumpdesign/sampler.hpp"
#include "jumpdesign/synthetic.hpp"

using namespace jumpdesign;

namespace {

StagePmf uniform_pmf(std::size_t m) {
  StagePmf pmf;
  pmf.dimension = 1;
  for (std::size_t i = 0; i < m; ++i) pmf.candidates.push_back(static_cast<double>(i));
  pmf.probs.assign(m, 1.0 / static_cast<double>(m));
  return pmf;
}

// Regularized upper incomplete gamma Q(a, x) by series / continued fraction.
double gamma_q(double a, double x) {
  if (x < a + 1.0) {
    double sum = 1.0 / a, term = sum;
    for (int n = 1; n < 10000; ++n) {
      term *= x / (a + n);
      sum += term;
      if (term < sum * 1e-15) break;
    }
    return 1.0 - sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
  }
  double b = x + 1.0 - a, c = 1e300, d = 1.0 / b, h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    c = b + an / c;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-15) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

Dataset noisy_sample(const GroundTruth& truth, std::size_t n, double sigma, std::uint64_t seed, Mask* sampled) {
  Dataset d(2, truth.bounds);
  std::mt19937_64 gen(seed);
  const auto& g = *truth.grid;
  std::uniform_int_distribution<std::size_t> u(0, g.size() - 1);
  while (d.size() < n) {
    const std::size_t idx = u(gen);
    if (sampled->test(idx)) continue;
    sampled->set(idx);
    const auto c = g.coords(idx);
    d.insert(c, observe_at(truth, c, sigma, seed));
  }
  return d;
}

}  // namespace

TEST_CASE("desired density score") {
  CHECK(desired_density_score(0.0) == 1.0);
  CHECK(desired_density_score(1.0) == doctest::Approx(2.718281828459045));
}

TEST_CASE("strategy names round trip") {
  for (auto s : all_strategies()) CHECK(parse_strategy(strategy_name(s)) == s);
  CHECK_THROWS_AS(parse_strategy("greedy"), std::invalid_argument);
}

TEST_CASE("kde of a single point and outside the support") {
  const KernelSpec k;
  const std::vector<double> one{0.5, 0.5};
  CHECK(kde_density(one, one, 2, 0.2, k) == doctest::Approx(k.density(std::vector<double>{0.0, 0.0}) / 0.04));
  CHECK(kde_density(std::vector<double>{0.9, 0.9}, one, 2, 0.2, k) == 0.0);
  CHECK_THROWS_AS(kde_density(one, one, 2, 0.0, k), std::invalid_argument);
  CHECK_THROWS_AS(kde_density(one, std::vector<double>{}, 2, 0.2, k), std::invalid_argument);
}

TEST_CASE("kde of uniform points is close to one") {
  std::mt19937_64 gen(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> pts(2000);
  for (double& v : pts) v = u(gen);
  const double d = kde_density(std::vector<double>{0.5, 0.5}, pts, 2, 0.2, KernelSpec{});
  CHECK(std::abs(d - 1.0) < 0.15);
}

TEST_CASE("rule of thumb kde bandwidth") {
  const Box b = Box::of_grid({101, 101});
  CHECK(rule_of_thumb_kde_bandwidth(b, 64) == doctest::Approx(0.5 * std::sqrt(2.0) * 100 * std::pow(64.0, -1.0 / 6)));
  SamplerSpec fixed;
  fixed.kde_rule = KdeBandwidthRule::Fixed;
  fixed.kde_bandwidth = 3.0;
  CHECK(kde_bandwidth(fixed, b, 10) == 3.0);
  fixed.kde_bandwidth = 0.0;
  CHECK_THROWS(kde_bandwidth(fixed, b, 10));
}

TEST_CASE("normalization sums to one and is shift invariant") {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> z(0.0, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> scores(1 + trial * 7);
    for (double& s : scores) s = z(gen);
    const auto p = normalize_log_scores(scores);
    double total = 0.0;
    for (double v : p) {
      CHECK(v >= 0.0);
      total += v;
    }
    CHECK(std::abs(total - 1.0) <= 1e-12);
    // adding a constant to every statistic scales every score by e^c
    const double c = z(gen) * 10;
    std::vector<double> shifted(scores);
    for (double& s : shifted) s += c;
    const auto q = normalize_log_scores(shifted);
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(q[i] == doctest::Approx(p[i]).epsilon(1e-12));
  }
}

TEST_CASE("zero scores fall back to uniform") {
  const double ninf = -std::numeric_limits<double>::infinity();
  bool fallback = false;
  const auto p = normalize_log_scores(std::vector<double>{ninf, ninf, ninf, ninf}, &fallback);
  CHECK(fallback);
  for (double v : p) CHECK(v == 0.25);
  const auto q = normalize_log_scores(std::vector<double>{ninf, 0.0}, &fallback);
  CHECK_FALSE(fallback);
  CHECK(q[0] == 0.0);
  CHECK(q[1] == 1.0);
}

TEST_CASE("nearest unsampled pixel") {
  Mask m(GridShape{5, 5});
  CHECK(nearest_unsampled_pixel(2.2, 2.4, m) == m.shape.index(2, 2));
  m.set(m.shape.index(2, 2));
  // (2,1) and (2,3) are equidistant from (2, 2); the lower row wins
  CHECK(nearest_unsampled_pixel(2.0, 2.0, m) == m.shape.index(2, 1));
  for (std::size_t i = 0; i < m.shape.size(); ++i) m.set(i);
  m.set(m.shape.index(4, 4), false);
  CHECK(nearest_unsampled_pixel(0.0, 0.0, m) == m.shape.index(4, 4));
  m.set(m.shape.index(4, 4));
  CHECK(nearest_unsampled_pixel(0.0, 0.0, m) == m.shape.size());
}

TEST_CASE("nearest unsampled pixel matches brute force") {
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> u(-1.0, 21.0);
  Mask m(GridShape{20, 15});
  for (std::size_t i = 0; i < m.shape.size(); ++i) m.set(i, gen() % 3 != 0);
  for (int t = 0; t < 500; ++t) {
    const double x = u(gen), y = u(gen) * 0.7;
    std::size_t best = m.shape.size();
    double bd = 1e300;
    for (std::size_t i = 0; i < m.shape.size(); ++i) {
      if (m.test(i)) continue;
      const auto c = m.shape.coords(i);
      const double d = (c[0] - x) * (c[0] - x) + (c[1] - y) * (c[1] - y);
      if (d < bd) {
        bd = d;
        best = i;
      }
    }
    CHECK(nearest_unsampled_pixel(x, y, m) == best);
  }
}

TEST_CASE("candidates are distinct unsampled pixels") {
  const auto truth = make_synthetic(synthetic_preset("disk", GridShape{51, 51}));
  Mask sampled(*truth.grid);
  const Dataset d = noisy_sample(truth, 200, 0.1, 3, &sampled);
  const auto cand = candidate_locations(d, &sampled, 0);
  REQUIRE(cand.size() % 2 == 0);
  REQUIRE(!cand.empty());
  std::set<std::size_t> seen;
  for (std::size_t i = 0; i < cand.size(); i += 2) {
    const std::size_t idx = truth.grid->index_of(cand[i], cand[i + 1]);
    REQUIRE(idx < truth.grid->size());
    CHECK_FALSE(sampled.test(idx));
    CHECK(seen.insert(idx).second);
  }
  // raw centroids, one per triangle
  const auto raw = candidate_locations(d, nullptr, 0);
  CHECK(raw.size() / 2 >= cand.size() / 2);
}

TEST_CASE("non-planar designs draw candidates from a uniform pool") {
  Dataset d(3, Box{Coords(3, 0.0), Coords(3, 1.0)});
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  while (d.size() < 30) d.insert(std::vector<double>{u(gen), u(gen), u(gen)}, 0.0);
  const auto a = candidate_locations(d, nullptr, 9);
  const auto b = candidate_locations(d, nullptr, 9);
  CHECK(a == b);
  CHECK(a.size() == 3 * 60);
  for (double v : a) CHECK((v >= 0.0 && v <= 1.0));
}

TEST_CASE("constant surface: proposed pmf is shaped only by the design density") {
  GroundTruth flat = make_synthetic(synthetic_preset("flat", GridShape{41, 41}));
  Mask sampled(*flat.grid);
  const Dataset d = noisy_sample(flat, 150, 0.0, 4, &sampled);
  const SpatialIndex index(d);
  SamplerSpec spec;
  const StagePmf pmf = stage_pmf(d, index, spec, SmootherConfig{}, &sampled);
  REQUIRE(pmf.size() > 0);
  for (std::size_t i = 0; i < pmf.size(); ++i) {
    CHECK(pmf.scores.estimates[i].jump_stat < 1e-20);
  }
  // probability ratios equal inverse density ratios
  const double floor = 1e-8 * *std::max_element(pmf.scores.densities.begin(), pmf.scores.densities.end());
  for (std::size_t i = 1; i < pmf.size(); ++i) {
    const double want = std::max(pmf.scores.densities[0], floor) / std::max(pmf.scores.densities[i], floor);
    CHECK(pmf.probs[i] / pmf.probs[0] == doctest::Approx(want).epsilon(1e-9));
  }
  // uniform sampler on the same candidates is flat
  spec.strategy = Strategy::Uniform;
  const StagePmf u = stage_pmf(d, index, spec, SmootherConfig{}, &sampled);
  REQUIRE(u.size() == pmf.size());
  for (double p : u.probs) CHECK(p == doctest::Approx(1.0 / u.size()));
}

TEST_CASE("zero statistic with flat density gives the uniform pmf") {
  const std::vector<double> zeros(17, 0.0);
  const auto p = normalize_log_scores(zeros);
  for (double v : p) CHECK(v == doctest::Approx(1.0 / 17).epsilon(1e-15));
}

TEST_CASE("stage pmfs are normalized for every strategy") {
  const auto truth = make_synthetic(synthetic_preset("step", GridShape{41, 41}));
  Mask sampled(*truth.grid);
  const Dataset d = noisy_sample(truth, 120, 0.1, 6, &sampled);
  const SpatialIndex index(d);
  for (auto s : all_strategies()) {
    SamplerSpec spec;
    spec.strategy = s;
    const StagePmf pmf = stage_pmf(d, index, spec, SmootherConfig{}, &sampled);
    double total = 0.0;
    for (double p : pmf.probs) {
      CHECK(p >= 0.0);
      total += p;
    }
    CHECK(std::abs(total - 1.0) <= 1e-12);
  }
}

TEST_CASE("draw_stage basics") {
  StagePmf pmf = uniform_pmf(5);
  pmf.probs = {0.0, 0.0, 1.0, 0.0, 0.0};
  const auto one = draw_stage(pmf, 1, 42);
  REQUIRE(one.indices.size() == 1);
  CHECK(one.indices[0] == 2);
  CHECK(one.coords == std::vector<double>{2.0});

  const auto all = draw_stage(pmf, 8, 42);
  CHECK(all.indices.size() == 5);
  CHECK(all.shortfall == 3);
  CHECK(all.indices[0] == 2);
  CHECK(std::set<std::size_t>(all.indices.begin(), all.indices.end()).size() == 5);

  const StagePmf u = uniform_pmf(100);
  CHECK(draw_stage(u, 30, 7).indices == draw_stage(u, 30, 7).indices);
  CHECK(draw_stage(u, 30, 7).indices != draw_stage(u, 30, 8).indices);
  CHECK_THROWS_AS(draw_stage(StagePmf{}, 1, 0), std::invalid_argument);

  const auto iid = draw_stage(pmf, 4, 1, false);
  CHECK(iid.indices == std::vector<std::size_t>(4, 2));
}

TEST_CASE("draws from a uniform pmf are uniform") {
  const std::size_t m = 10000, n = 100, trials = 10000;
  const StagePmf pmf = uniform_pmf(m);
  std::vector<double> counts(m, 0.0);
  for (std::size_t t = 0; t < trials; ++t) {
    const auto d = draw_stage(pmf, n, 1000 + t);
    for (auto i : d.indices) counts[i] += 1.0;
  }
  const double expected = static_cast<double>(n * trials) / m;
  double chi2 = 0.0;
  for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
  // without replacement the per-cell variance shrinks by (m - n) / (m - 1)
  chi2 /= static_cast<double>(m - n) / static_cast<double>(m - 1);
  const double p_value = gamma_q(0.5 * (m - 1), 0.5 * chi2);
  CAPTURE(chi2);
  CHECK(p_value > 0.001);
}

TEST_CASE("distinct draws follow successive sampling probabilities") {
  // two draws from {0.5, 0.3, 0.2}: P(first two = {0, 1}) = 0.5*0.3/0.5 + 0.3*0.5/0.7
  StagePmf pmf = uniform_pmf(3);
  pmf.probs = {0.5, 0.3, 0.2};
  const int trials = 40000;
  int hits = 0;
  for (int t = 0; t < trials; ++t) {
    const auto d = draw_stage(pmf, 2, 5000 + t);
    const std::set<std::size_t> s(d.indices.begin(), d.indices.end());
    if (s == std::set<std::size_t>{0, 1}) ++hits;
  }
  const double want = 0.5 * 0.3 / 0.5 + 0.3 * 0.5 / 0.7;
  const double se = std::sqrt(want * (1 - want) / trials);
  CHECK(std::abs(static_cast<double>(hits) / trials - want) < 4 * se);
}

TEST_CASE("stage allotments and budget") {
  CHECK(stage_allotments(4040, 6) == std::vector<std::size_t>{674, 674, 674, 674, 674, 670});
  CHECK(stage_allotments(10, 3) == std::vector<std::size_t>{4, 4, 2});
  CHECK(stage_allotments(2, 4) == std::vector<std::size_t>{1, 1, 0, 0});
  CHECK(design_budget(201 * 201, 0.10) == 4040);
  std::vector<std::string> w;
  CHECK(design_budget(100, 1.0, &w) == 100);
  CHECK(w.empty());
  CHECK_THROWS(design_budget(100, 0.0));
  CHECK_THROWS(stage_allotments(10, 0));
}

TEST_CASE("sequential design samples distinct pixels deterministically") {
  const auto truth = make_synthetic(synthetic_preset("disk", GridShape{41, 41}));
  for (auto s : all_strategies()) {
    DesignConfig cfg;
    cfg.sampler.strategy = s;
    cfg.budget_fraction = 0.2;
    cfg.sigma = 0.1;
    cfg.seed = 9;
    const auto a = run_sequential_design(truth, cfg);
    const auto b = run_sequential_design(truth, cfg);
    CHECK(a.data.size() == design_budget(41 * 41, 0.2));
    CHECK(a.sampled.count() == a.data.size());
    CHECK(a.stages.size() == 6);
    std::size_t drawn = 0;
    for (const auto& st : a.stages) drawn += st.drawn;
    CHECK(drawn == a.data.size());
    REQUIRE(b.data.size() == a.data.size());
    for (std::size_t i = 0; i < a.data.size(); ++i) {
      CHECK(a.data.coords(i)[0] == b.data.coords(i)[0]);
      CHECK(a.data.coords(i)[1] == b.data.coords(i)[1]);
      CHECK(a.data.value(i) == b.data.value(i));
    }
  }
}

TEST_CASE("single uniform stage is a simple random sample") {
  const auto truth = make_synthetic(synthetic_preset("flat", GridShape{30, 30}));
  DesignConfig cfg;
  cfg.sampler.strategy = Strategy::Uniform;
  cfg.n_stages = 1;
  cfg.budget_fraction = 0.1;
  const auto r = run_sequential_design(truth, cfg);
  CHECK(r.data.size() == 90);
  CHECK(r.stages.size() == 1);
  CHECK(r.stages[0].candidates == 0);
}

TEST_CASE("noise at a pixel does not depend on the sampler") {
  const auto truth = make_synthetic(synthetic_preset("disk", GridShape{31, 31}));
  DesignConfig a;
  a.sigma = 0.2;
  a.seed = 4;
  a.budget_fraction = 0.3;
  DesignConfig b = a;
  b.sampler.strategy = Strategy::WrmsC;
  const auto ra = run_sequential_design(truth, a);
  const auto rb = run_sequential_design(truth, b);
  std::size_t shared = 0;
  for (std::size_t i = 0; i < ra.data.size(); ++i) {
    const auto j = rb.data.find(ra.data.coords(i));
    if (!j) continue;
    ++shared;
    CHECK(rb.data.value(*j) == ra.data.value(i));
  }
  CHECK(shared >= ra.stages[0].drawn);
}

TEST_CASE("design input errors") {
  auto truth = make_synthetic(synthetic_preset("disk", GridShape{21, 21}));
  DesignConfig cfg;
  cfg.budget_fraction = 0.01;  // 4 points over 6 stages
  CHECK_THROWS_AS(run_sequential_design(truth, cfg), std::invalid_argument);
  cfg.budget_fraction = 1.5;
  CHECK_THROWS_AS(run_sequential_design(truth, cfg), std::invalid_argument);
  cfg.budget_fraction = 0.1;
  cfg.n_stages = 0;
  CHECK_THROWS_AS(run_sequential_design(truth, cfg), std::invalid_argument);
  truth.grid.reset();
  cfg.n_stages = 2;
  CHECK_THROWS_AS(run_sequential_design(truth, cfg), std::invalid_argument);
}

TEST_CASE("full budget samples every pixel") {
  const auto truth = make_synthetic(synthetic_preset("step", GridShape{12, 12}));
  DesignConfig cfg;
  cfg.budget_fraction = 1.0;
  cfg.n_stages = 3;
  cfg.sigma = 0.05;
  const auto r = run_sequential_design(truth, cfg);
  CHECK(r.data.size() == 144);
  CHECK(r.sampled.count() == 144);
}
