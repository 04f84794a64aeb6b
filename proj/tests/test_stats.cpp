#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <string>
#include <vector>

#include "geomtree/error.hpp"
#include "geomtree/ordering.hpp"
#include "geomtree/params.hpp"
#include "geomtree/stats.hpp"
#include "geomtree/tree.hpp"

using namespace geomtree;

namespace {

// ((x,x),x): a cherry and a leaf under the progenitor.
Tree cherry_and_leaf() {
  TreeBuilder b;
  VertexId prog = b.add_child(b.root());
  VertexId top = b.add_child(prog);
  b.add_child(prog);
  b.add_child(top);
  b.add_child(top);
  return b.finish();
}

// Caterpillar with n leaves: a cherry at the tip and n - 2 single-leaf
// steps stacked above it.
Tree caterpillar(int n_leaves) {
  TreeBuilder b;
  VertexId at = b.add_child(b.root());
  for (int i = 0; i < n_leaves - 2; ++i) {
    b.add_child(at);
    at = b.add_child(at);
  }
  b.add_child(at);
  b.add_child(at);
  return b.finish();
}

// Perfect binary tree with 2^(k-1) leaves.
Tree perfect(int k) {
  TreeBuilder b;
  std::vector<VertexId> level = {b.add_child(b.root())};
  for (int d = 1; d < k; ++d) {
    std::vector<VertexId> next;
    for (VertexId v : level) {
      next.push_back(b.add_child(v));
      next.push_back(b.add_child(v));
    }
    level = std::move(next);
  }
  return b.finish();
}

}  // namespace

TEST_CASE("matrix cells are ratio-of-sums estimates") {
  BranchCounts bc;
  bc.ensure_order(3);
  bc.n_branch[1] = 40;
  bc.n_branch[2] = 10;
  bc.n_side[2][1] = 25;
  TokunagaMatrix tm = tokunaga_from_counts(bc, 7);

  CHECK(tm.n_trees == 7);
  CHECK(tm.max_order() == 3);
  CHECK(tm.branch_count(2) == 10);
  CHECK(tm.side_count(1, 2) == 25);

  REQUIRE(tm.cell(1, 2).has_value());
  CHECK(*tm.cell(1, 2) == doctest::Approx(2.5));
  // No order-3 branch was ever seen, so those cells are undefined.
  CHECK_FALSE(tm.cell(1, 3).has_value());
  CHECK_FALSE(tm.cell(2, 3).has_value());
  CHECK_FALSE(tm.cell(1, 9).has_value());

  CHECK_THROWS_AS(tm.cell(2, 2), ParameterError);
  CHECK_THROWS_AS(tm.cell(0, 2), ParameterError);
  CHECK_THROWS_AS(tm.cell(3, 1), ParameterError);
}

TEST_CASE("estimation pools counts over the whole ensemble") {
  std::vector<Tree> trees = {cherry_and_leaf(), cherry_and_leaf(), cherry_and_leaf()};
  TokunagaMatrix tm = estimate_tokunaga(trees);

  CHECK(tm.n_trees == 3);
  CHECK(tm.max_order() == 2);
  CHECK(tm.branch_count(1) == 9);
  CHECK(tm.branch_count(2) == 3);
  CHECK(tm.side_count(1, 2) == 3);
  REQUIRE(tm.cell(1, 2).has_value());
  CHECK(*tm.cell(1, 2) == doctest::Approx(1.0));

  TokunagaMatrix none = estimate_tokunaga(std::span<const Tree>{});
  CHECK(none.n_trees == 0);
  CHECK(none.max_order() == 0);
  CHECK_FALSE(none.cell(1, 2).has_value());
}

TEST_CASE("gap spread flags matrices that are not constant on diagonals") {
  BranchCounts bc;
  bc.ensure_order(3);
  bc.n_branch[1] = 4000;
  bc.n_branch[2] = 1000;
  bc.n_branch[3] = 1000;
  bc.n_side[2][1] = 1000;  // cell (1,2) = 1.0
  bc.n_side[3][2] = 1100;  // cell (2,3) = 1.1
  bc.n_side[3][1] = 2000;  // cell (1,3) = 2.0, alone on its diagonal
  TokunagaMatrix tm = tokunaga_from_counts(bc, 1000);

  GapReport rep = tokunaga_gap_spread(tm, 0.05);
  // Gap 1 holds 1.0 and 1.1: mean 1.05, worst deviation 0.05.
  CHECK(rep.mean_by_gap.at(1) == doctest::Approx(1.05));
  CHECK(rep.spread_by_gap.at(1) == doctest::Approx(0.05 / 1.05));
  CHECK(rep.mean_by_gap.at(2) == doctest::Approx(2.0));
  CHECK(rep.spread_by_gap.at(2) == doctest::Approx(0.0));
  CHECK(rep.max_relative_spread == doctest::Approx(1.0 / 21.0));
  CHECK(rep.toeplitz);

  CHECK_FALSE(tokunaga_gap_spread(tm, 0.04).toeplitz);

  // A branch-count floor above every cell leaves nothing to compare.
  GapReport starved = tokunaga_gap_spread(tm, 0.04, 1500);
  CHECK(starved.toeplitz);
  CHECK(starved.max_relative_spread == 0.0);
  CHECK(starved.spread_by_gap.empty());
}

TEST_CASE("the fit recovers exact geometric coefficients") {
  // Side counts manufactured from T_k = 0.5 * 3^(k-1) with 1000 branches
  // of every order, so the log-linear fit must be exact.
  BranchCounts bc;
  bc.ensure_order(4);
  for (int j = 1; j <= 4; ++j) bc.n_branch[j] = 1000;
  for (int j = 2; j <= 4; ++j)
    for (int i = 1; i < j; ++i)
      bc.n_side[j][i] = static_cast<std::int64_t>(std::llround(1000.0 * 0.5 * std::pow(3.0, j - i - 1)));
  TokunagaMatrix tm = tokunaga_from_counts(bc, 1000);

  TokunagaFit fit = fit_tokunaga(tm);
  CHECK(fit.gaps_used == 3);
  CHECK(fit.a == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(fit.c == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(fit.residual < 1e-12);

  BranchCounts thin;
  thin.ensure_order(2);
  thin.n_branch[1] = 10;
  thin.n_branch[2] = 5;
  thin.n_side[2][1] = 5;
  CHECK_THROWS_AS(fit_tokunaga(tokunaga_from_counts(thin, 5)), Error);
}

TEST_CASE("shape keys fall back to size buckets on huge trees") {
  CHECK(shape_key(Tree::cherry()) == "(L,L)");
  CHECK(shape_key(cherry_and_leaf()) == "((L,L),L)");
  Tree big = caterpillar(600);  // 1200 vertices, past the default cap
  CHECK(shape_key(big) == "#1200");
  CHECK(shape_key(big, 2000) != "#1200");
}

TEST_CASE("shape distributions normalize, merge and rank") {
  ShapeDistribution a;
  a.add("x");
  a.add("x");
  a.add("x");
  a.add("y");
  CHECK(a.total == doctest::Approx(4.0));
  auto top = a.top(2);
  REQUIRE(top.size() == 2);
  CHECK(top[0].first == "x");
  CHECK(top[0].second == doctest::Approx(0.75));
  CHECK(top[1].first == "y");
  CHECK(top[1].second == doctest::Approx(0.25));

  ShapeDistribution tie;
  tie.add("ab");
  tie.add("aa");
  auto tied = tie.top(2);
  CHECK(tied[0].first == "aa");  // equal weight, lexicographic order

  ShapeDistribution b;
  b.add("x", 2.0);
  b.add("z", 2.0);
  CHECK(shape_tv_distance(a, a, 10) == doctest::Approx(0.0));
  CHECK(shape_tv_distance(a, b, 10) == doctest::Approx(0.5));

  ShapeDistribution c1, c2;
  c1.add("only");
  c2.add("other");
  CHECK(shape_tv_distance(c1, c2, 10) == doctest::Approx(1.0));

  // With top_k = 1 the differing light shapes fold into the shared tail.
  ShapeDistribution d1, d2;
  d1.add("x", 3.0);
  d1.add("y", 1.0);
  d2.add("x", 3.0);
  d2.add("w", 1.0);
  CHECK(shape_tv_distance(d1, d2, 1) == doctest::Approx(0.0));

  a.merge(b);
  CHECK(a.total == doctest::Approx(8.0));
  CHECK(a.mass.at("x") == doctest::Approx(5.0));
  CHECK(a.mass.at("z") == doctest::Approx(2.0));

  ShapeDistribution empty;
  CHECK_THROWS_AS(shape_tv_distance(empty, b, 5), ParameterError);
}

TEST_CASE("horton accumulation over a uniform ensemble") {
  HortonAccumulator acc;
  Tree cat = caterpillar(4);
  std::vector<double> unit(cat.vertex_count(), 1.0);
  unit[0] = 0.0;
  for (int r = 0; r < 10; ++r) acc.add(cat, &unit);

  HortonReport rep = horton_report(acc);
  CHECK(rep.order == 2);
  CHECK(rep.n_trees == 10);
  CHECK(rep.mean_counts[1] == doctest::Approx(4.0));
  CHECK(rep.mean_counts[2] == doctest::Approx(1.0));
  CHECK(rep.count_ratios[1] == doctest::Approx(4.0));
  CHECK(rep.r_b_estimate == doctest::Approx(4.0));
  CHECK(rep.window_lo == 1);
  CHECK(rep.window_hi == 1);
  // Four unit leaf edges against the three-edge trunk.
  CHECK(rep.mean_lengths[1] == doctest::Approx(1.0));
  CHECK(rep.mean_lengths[2] == doctest::Approx(3.0));
  REQUIRE(rep.r_r_estimate.has_value());
  CHECK(*rep.r_r_estimate == doctest::Approx(3.0));
  REQUIRE(rep.d_estimate.has_value());
  CHECK(*rep.d_estimate == doctest::Approx(std::log(4.0) / std::log(3.0)));

  SUBCASE("all trees must share one order") {
    std::vector<double> other(perfect(3).vertex_count(), 1.0);
    CHECK_THROWS_AS(acc.add(perfect(3), &other), StructureError);
  }
  SUBCASE("lengths are all or nothing") {
    CHECK_THROWS_AS(acc.add(cat, nullptr), ParameterError);
  }
  SUBCASE("length vectors must match the tree") {
    std::vector<double> wrong(3, 1.0);
    CHECK_THROWS_AS(acc.add(cat, &wrong), ParameterError);
  }
  SUBCASE("merging adds counts") {
    HortonAccumulator more;
    more.add(cat, &unit);
    more.merge(acc);
    CHECK(more.n_trees == 11);
    CHECK(horton_report(more).mean_counts[1] == doctest::Approx(4.0));

    HortonAccumulator blank;
    blank.merge(acc);
    CHECK(blank.n_trees == 10);
  }
}

TEST_CASE("horton report straight from trees") {
  std::vector<Tree> trees(5, perfect(4));
  HortonReport rep = horton_report(trees);
  CHECK(rep.order == 4);
  CHECK(rep.mean_counts[1] == doctest::Approx(8.0));
  CHECK(rep.mean_counts[4] == doctest::Approx(1.0));
  CHECK(rep.r_b_estimate == doctest::Approx(2.0));
  CHECK_FALSE(rep.r_r_estimate.has_value());
  CHECK_FALSE(rep.d_estimate.has_value());

  CHECK_THROWS_AS(horton_report(HortonAccumulator{}), ParameterError);
}

TEST_CASE("dimension and ratio conversions") {
  CHECK(fractal_dimension(2.0) == doctest::Approx(2.0));
  CHECK(fractal_dimension(4.0) == doctest::Approx(1.5));
  CHECK(std::isinf(fractal_dimension(1.0)));
  CHECK_THROWS_AS(fractal_dimension(0.9), ParameterError);

  CHECK(horton_ratio_to_c(4.0) == doctest::Approx(2.0));
  CHECK(horton_ratio_to_c(5.0) == doctest::Approx(2.5));
  CHECK_THROWS_AS(horton_ratio_to_c(2.0), ParameterError);
  CHECK_THROWS_AS(horton_ratio_to_c(1.5), ParameterError);
}

TEST_CASE("principal pair joint law factorizes only at ratio two") {
  double at2 = principal_pair_product_gap(TokunagaParams::critical(2.0), 40);
  CHECK(at2 < 1e-9);
  double at3 = principal_pair_product_gap(TokunagaParams::critical(3.0), 40);
  CHECK(at3 > 0.01);
}

TEST_CASE("principal subtree diagnostics at the self-similar point") {
  GenerationLimits limits;
  limits.max_vertices = 2'000'000;
  PrincipalSubtreeReport rep = principal_subtree_tests(CriticalTokunaga{2.0}, 20000, 101, 1, limits);
  CHECK(rep.n_samples == 20000);
  CHECK(rep.order_gof.p_value > 0.01);
  CHECK(rep.independence.p_value > 0.001);
  CHECK(rep.shape_tv < 0.05);
  CHECK(rep.joint_product_tv < 1e-9);
}
