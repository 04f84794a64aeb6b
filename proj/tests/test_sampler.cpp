#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "geomtree/ensemble.hpp"
#include "geomtree/ordering.hpp"
#include "geomtree/params.hpp"
#include "geomtree/rng.hpp"
#include "geomtree/sampler.hpp"
#include "geomtree/stats.hpp"
#include "geomtree/stattest.hpp"
#include "geomtree/tree.hpp"

using namespace geomtree;

TEST_CASE("parameter families expose the running sums") {
  TokunagaParams tp = TokunagaParams::critical(2.0);
  CHECK(tp.p() == 0.5);
  CHECK(tp.T(1) == 1.0);
  CHECK(tp.T(4) == 8.0);
  CHECK(tp.S(0) == 1.0);
  CHECK(tp.S(5) == 32.0);
  CHECK(tp.termination_prob(3) == doctest::Approx(0.25));

  TokunagaParams ex = TokunagaParams::explicit_seq(0.3, {1.0, 0.5, 2.0});
  CHECK(ex.T(2) == 0.5);
  CHECK(ex.T(7) == 0.0);
  CHECK(ex.S(3) == doctest::Approx(4.5));
  CHECK(ex.S(9) == doctest::Approx(4.5));

  TokunagaParams geo = TokunagaParams::explicit_seq(0.5, {1.0}, 1.0);
  CHECK(geo.T(6) == 1.0);
  CHECK(geo.S(6) == doctest::Approx(7.0));

  CHECK_THROWS_AS(TokunagaParams::critical(0.5), ParameterError);
  CHECK_THROWS_AS(TokunagaParams::explicit_seq(0.0, {1.0}), ParameterError);
  CHECK_THROWS_AS(TokunagaParams::explicit_seq(0.5, {-1.0}), ParameterError);
}

TEST_CASE("side order probabilities at the self-similar point") {
  TokunagaParams tp = TokunagaParams::critical(2.0);
  // Order 3: S_2 - 1 = 3, weights T_2 = 2 and T_1 = 1.
  std::vector<double> probs = tp.side_order_probs(3);
  REQUIRE(probs.size() == 2);
  CHECK(probs[0] == doctest::Approx(2.0 / 3.0));
  CHECK(probs[1] == doctest::Approx(1.0 / 3.0));

  // No side branches exist when every coefficient vanishes.
  TokunagaParams flat = TokunagaParams::critical(1.0);
  CHECK_THROWS_AS(flat.side_order_probs(2), UndefinedDistributionError);
}

TEST_CASE("geometric sampling matches its law") {
  RngStream rng(17);
  CHECK(geom_sample(1.0, rng) == 0);
  CHECK(geom_sample(1.0, rng) == 0);

  std::vector<std::int64_t> counts(128, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    std::int64_t k = geom_sample(0.25, rng);
    REQUIRE(k >= 0);
    if (k < 128) ++counts[static_cast<std::size_t>(k)];
  }
  auto pmf = [](int k) { return 0.25 * std::pow(0.75, k); };
  CHECK(chi_square_gof(counts, pmf).p_value > 0.01);
}

TEST_CASE("thinning a geometric keeps it geometric with the boosted rate") {
  CHECK(thinned_geometric_param(0.25, 0.5) == doctest::Approx(0.4));
  CHECK(thinned_geometric_param(0.5, 1.0) == doctest::Approx(0.5));
  CHECK(thinned_geometric_param(1.0, 0.3) == doctest::Approx(1.0));
}

TEST_CASE("conditioned generation hits the requested order") {
  RngStream rng(23);
  for (double c : {1.0, 1.5, 2.0}) {
    TokunagaParams tp = TokunagaParams::critical(c);
    for (int k = 1; k <= 6; ++k) {
      Tree t = generate_with_order(tp, k, rng);
      CHECK(tree_order(t) == k);
    }
  }
  TokunagaParams ex = TokunagaParams::explicit_seq(0.4, {0.7, 0.2}, 0.5);
  for (int k = 1; k <= 5; ++k)
    CHECK(tree_order(generate_conditioned(ex, k, rng, ConditioningMode::kRejection)) == k);
}

TEST_CASE("without side branches the trees are perfect binaries") {
  RngStream rng(31);
  TokunagaParams tp = TokunagaParams::critical(1.0);
  Tree t = generate_with_order(tp, 4, rng);
  CHECK(canonical_code(t) == "(((L,L),(L,L)),((L,L),(L,L)))");
  CHECK(t.leaf_count() == 8);
}

TEST_CASE("the sampled order follows the progenitor law") {
  RngStream rng(41);
  TokunagaParams tp = TokunagaParams::critical(1.5);
  std::vector<std::int64_t> counts(64, 0);
  const int n = 50000;
  std::int64_t aborted = 0;
  auto gen = [&](RngStream& r) { return generate_recursive(tp, r); };
  for (int i = 0; i < n; ++i) {
    int k = tree_order(sample_with_retry(gen, rng, aborted));
    if (k - 1 < 64) ++counts[static_cast<std::size_t>(k - 1)];
  }
  auto pmf = [](int k) { return 0.5 * std::pow(0.5, k); };
  CHECK(chi_square_gof(counts, pmf).p_value > 0.01);
}

TEST_CASE("side branch counts of a conditioned branch are geometric") {
  // Order-3 branches terminate each step with probability 1/S_2 = 1/4,
  // so the number of side branches is Geometric(1/4) with mean 3.
  RngStream rng(43);
  TokunagaParams tp = TokunagaParams::critical(2.0);
  std::vector<std::int64_t> counts(256, 0);
  double total = 0.0;
  const int n = 20000;
  std::vector<int> ord;
  for (int i = 0; i < n; ++i) {
    Tree t = generate_with_order(tp, 3, rng);
    OrderedTree ot = compute_orders(std::move(t));
    for (const Branch& b : ot.branches) {
      if (b.order != 3) continue;
      std::int64_t m = static_cast<std::int64_t>(b.side_branch_orders.size());
      total += static_cast<double>(m);
      if (m < 256) ++counts[static_cast<std::size_t>(m)];
    }
  }
  CHECK(total / n == doctest::Approx(3.0).epsilon(0.05));
  auto pmf = [](int k) { return 0.25 * std::pow(0.75, k); };
  CHECK(chi_square_gof(counts, pmf).p_value > 0.01);
}

TEST_CASE("fair-coin generation gives the textbook shape masses") {
  RngStream rng(47);
  const int n = 100000;
  int cherries = 0;
  int singles = 0;
  std::int64_t aborted = 0;
  auto gen = [](RngStream& r) { return generate_gw_planted(r, GenerationLimits{1000000}); };
  for (int i = 0; i < n; ++i) {
    Tree t = sample_with_retry(gen, rng, aborted);
    std::string code = canonical_code(t);
    if (code == "L") ++singles;
    if (code == "(L,L)") ++cherries;
  }
  // P(single edge) = 1/2, P(cherry) = 1/8; three binomial sigmas.
  CHECK(std::abs(singles / double(n) - 0.5) < 3.0 * std::sqrt(0.25 / n));
  CHECK(std::abs(cherries / double(n) - 0.125) < 3.0 * std::sqrt(0.125 * 0.875 / n));
}

TEST_CASE("stepwise process construction agrees with the recursive one") {
  const std::int64_t n = 60000;
  GenerationLimits limits{1000000};
  ShapeDistribution recursive_shapes;
  ShapeDistribution process_shapes;
  {
    RngStream rng(53);
    std::int64_t aborted = 0;
    TokunagaParams tp = TokunagaParams::critical(2.0);
    auto gen = [&](RngStream& r) { return generate_recursive(tp, r, limits); };
    for (std::int64_t i = 0; i < n; ++i)
      recursive_shapes.add(shape_key(sample_with_retry(gen, rng, aborted)));
  }
  {
    RngStream rng(59);
    std::int64_t aborted = 0;
    TokunagaParams tp = TokunagaParams::critical(2.0);
    auto gen = [&](RngStream& r) { return generate_process(tp, r, limits).first; };
    for (std::int64_t i = 0; i < n; ++i)
      process_shapes.add(shape_key(sample_with_retry(gen, rng, aborted)));
  }
  CHECK(shape_tv_distance(recursive_shapes, process_shapes, 20) < 0.02);
}

TEST_CASE("the stepwise timeline is coherent") {
  RngStream rng(61);
  std::int64_t aborted = 0;
  TokunagaParams tp = TokunagaParams::critical(2.0);
  auto gen = [&](RngStream& r) { return generate_process(tp, r, GenerationLimits{100000}); };
  for (int i = 0; i < 200; ++i) {
    auto [t, timeline] = sample_with_retry(gen, rng, aborted);
    CHECK(timeline.initial_order == tree_order(t));
    CHECK_FALSE(timeline.events.empty());
    int last_time = 0;
    for (const ProcessEvent& e : timeline.events) {
      CHECK(e.time >= last_time);
      last_time = e.time;
      CHECK(e.member_order >= 1);
      if (e.kind == ProcessEvent::Kind::kSurviveSideBranch) {
        CHECK(e.side_order >= 1);
        CHECK(e.side_order < e.member_order);
      }
    }
  }
}

TEST_CASE("edge decorations are positive unit-mean exponentials") {
  RngStream rng(67);
  TokunagaParams tp = TokunagaParams::critical(2.0);
  double sum = 0.0;
  std::int64_t edges = 0;
  for (int i = 0; i < 500; ++i) {
    Tree t = generate_with_order(tp, 4, rng);
    std::vector<double> len = decorate_edge_lengths(t, rng);
    REQUIRE(len.size() == t.vertex_count());
    CHECK(len[0] == 0.0);
    for (std::size_t v = 1; v < len.size(); ++v) {
      CHECK(len[v] > 0.0);
      sum += len[v];
      ++edges;
    }
  }
  double mean = sum / static_cast<double>(edges);
  CHECK(mean == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("budget breaches abort, redraw and get counted") {
  RngStream rng(71);
  TokunagaParams tp = TokunagaParams::critical(2.0);
  GenerationLimits tight{60};
  std::int64_t aborted = 0;
  auto gen = [&](RngStream& r) { return generate_recursive(tp, r, tight); };
  for (int i = 0; i < 2000; ++i) {
    Tree t = sample_with_retry(gen, rng, aborted);
    CHECK(t.vertex_count() <= 60);
  }
  CHECK(aborted > 0);
}

namespace {

struct OrderTally {
  std::map<int, std::int64_t> by_order;
  void merge(const OrderTally& other) {
    for (auto [k, v] : other.by_order) by_order[k] += v;
  }
};

}  // namespace

TEST_CASE("sharded ensembles are deterministic in (seed, shards)") {
  EnsembleConfig cfg;
  cfg.n_samples = 4000;
  cfg.seed = 73;
  cfg.limits.max_vertices = 200000;
  TokunagaParams tp = TokunagaParams::critical(2.0);
  auto gen = [&tp, &cfg](RngStream& rng) { return generate_recursive(tp, rng, cfg.limits); };
  auto consume = [](Tree t, OrderTally& acc, RngStream&) { ++acc.by_order[tree_order(t)]; };

  cfg.shards = 3;
  OrderTally a = run_ensemble<OrderTally>(cfg, gen, consume);
  OrderTally b = run_ensemble<OrderTally>(cfg, gen, consume);
  CHECK(a.by_order == b.by_order);

  cfg.shards = 1;
  OrderTally c = run_ensemble<OrderTally>(cfg, gen, consume);
  std::int64_t total = 0;
  for (auto [k, v] : c.by_order) total += v;
  CHECK(total == 4000);
  // Different shard counts reshuffle the streams but keep the law; the
  // order-1 fraction moves by at most a few standard errors.
  double f1a = static_cast<double>(a.by_order[1]) / 4000.0;
  double f1c = static_cast<double>(c.by_order[1]) / 4000.0;
  CHECK(std::abs(f1a - 0.5) < 0.04);
  CHECK(std::abs(f1c - 0.5) < 0.04);
}

TEST_CASE("direct and rejection conditioning sample the same shapes") {
  const int n = 20000;
  GenerationLimits limits{500000};
  TokunagaParams tp = TokunagaParams::critical(2.0);
  ShapeDistribution direct_shapes;
  ShapeDistribution rejected_shapes;
  RngStream rng(79);
  std::int64_t aborted = 0;
  auto direct_gen = [&](RngStream& r) {
    return generate_conditioned(tp, 3, r, ConditioningMode::kDirect, limits);
  };
  auto reject_gen = [&](RngStream& r) {
    return generate_conditioned(tp, 3, r, ConditioningMode::kRejection, limits);
  };
  for (int i = 0; i < n; ++i) direct_shapes.add(shape_key(sample_with_retry(direct_gen, rng, aborted)));
  for (int i = 0; i < n; ++i) rejected_shapes.add(shape_key(sample_with_retry(reject_gen, rng, aborted)));
  CHECK(shape_tv_distance(direct_shapes, rejected_shapes, 20) < 0.03);
}
