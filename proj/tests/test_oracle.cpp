#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <string>
#include <vector>

#include "geomtree/error.hpp"
#include "geomtree/oracle.hpp"
#include "geomtree/tree.hpp"

using namespace geomtree;

namespace {

Rational rat_abs(const Rational& v) { return v < 0 ? Rational(-v) : v; }

Tree cherry_and_leaf() { return tree_from_code("((L,L),L)"); }
Tree caterpillar4() { return tree_from_code("(((L,L),L),L)"); }
Tree double_cherry() { return tree_from_code("((L,L),(L,L))"); }

}  // namespace

TEST_CASE("rational literals parse exactly") {
  CHECK(parse_rational("7") == Rational(7));
  CHECK(parse_rational("-3/4") == Rational(-3, 4));
  CHECK(parse_rational("0.35") == Rational(7, 20));
  CHECK(parse_rational("2.") == Rational(2));
  CHECK(parse_rational(".5") == Rational(1, 2));
  CHECK(parse_rational(" 1 / 3 ") == Rational(1, 3));
  CHECK(parse_rational("+9/12") == Rational(3, 4));
  CHECK(to_double(Rational(1, 4)) == doctest::Approx(0.25));

  CHECK_THROWS_AS(parse_rational("1/0"), ParameterError);
  CHECK_THROWS_AS(parse_rational("abc"), ParameterError);
  CHECK_THROWS_AS(parse_rational("1.2.3"), ParameterError);
  CHECK_THROWS_AS(parse_rational(""), ParameterError);
  CHECK_THROWS_AS(parse_rational("1/2/3"), ParameterError);
}

TEST_CASE("exact parameter families") {
  ExactParams crit = ExactParams::critical(Rational(2));
  CHECK(crit.p() == Rational(1, 2));
  CHECK(crit.T(3) == Rational(4));
  CHECK(crit.S(0) == Rational(1));
  CHECK(crit.S(3) == Rational(8));
  CHECK(crit.order_prob(3) == Rational(1, 8));
  // Side counts are geometric with success 1/S_{K-1}.
  CHECK(crit.side_count_pmf(3, 2) == Rational(9, 64));
  CHECK(crit.side_order_prob(3, 1) == Rational(2, 3));
  CHECK(crit.side_order_prob(3, 2) == Rational(1, 3));

  ExactParams gen = ExactParams::explicit_seq(Rational(3, 10),
                                              {Rational(1), Rational(1, 2), Rational(2)});
  CHECK(gen.T(2) == Rational(1, 2));
  CHECK(gen.T(4) == Rational(0));
  CHECK(gen.S(3) == Rational(9, 2));
  CHECK(gen.side_order_prob(4, 1) == Rational(4, 7));

  ExactParams tailed = ExactParams::explicit_seq(Rational(1, 2), {Rational(1)}, Rational(1, 3));
  CHECK(tailed.T(3) == Rational(1, 9));

  ExactParams slim = ExactParams::critical(Rational(1));
  CHECK_THROWS_AS(slim.side_order_prob(2, 1), UndefinedDistributionError);

  CHECK_THROWS_AS(ExactParams::critical(Rational(1, 2)), ParameterError);
  CHECK_THROWS_AS(ExactParams::explicit_seq(Rational(0), {Rational(1)}), ParameterError);
  CHECK_THROWS_AS(ExactParams::explicit_seq(Rational(1, 2), {Rational(-1)}), ParameterError);
  CHECK_THROWS_AS(crit.T(0), ParameterError);
  CHECK_THROWS_AS(crit.S(-1), ParameterError);
}

TEST_CASE("exact shape measures at the self-similar point") {
  ExactParams crit = ExactParams::critical(Rational(2));
  CHECK(exact_measure(Tree::single_edge(), crit) == Rational(1, 2));
  CHECK(exact_measure(Tree::cherry(), crit) == Rational(1, 8));
  CHECK(exact_measure(cherry_and_leaf(), crit) == Rational(1, 16));
  CHECK(exact_measure(caterpillar4(), crit) == Rational(1, 32));
  CHECK(exact_measure(double_cherry(), crit) == Rational(1, 128));
  // A symmetric terminal split hanging off a chain: the pair factor must
  // not be applied twice.
  CHECK(exact_measure(tree_from_code("((L,L),((L,L),L))"), crit) == Rational(1, 128));

  CHECK_THROWS_AS(exact_measure(Tree::empty(), crit), StructureError);
}

TEST_CASE("without side coefficients only perfect shapes survive") {
  ExactParams slim = ExactParams::critical(Rational(1));
  CHECK(exact_measure(Tree::single_edge(), slim) == Rational(1, 2));
  CHECK(exact_measure(Tree::cherry(), slim) == Rational(1, 4));
  CHECK(exact_measure(double_cherry(), slim) == Rational(1, 8));
  CHECK(exact_measure(cherry_and_leaf(), slim) == Rational(0));
  CHECK(exact_measure(caterpillar4(), slim) == Rational(0));
}

TEST_CASE("exact shape measures away from criticality") {
  ExactParams gen = ExactParams::explicit_seq(Rational(7, 10),
                                              {Rational(1, 5), Rational(1, 5), Rational(1, 5)});
  CHECK(exact_measure(Tree::single_edge(), gen) == Rational(7, 10));
  // order 2, no side branches: (7/10)(3/10) * 1/S_1 with S_1 = 6/5.
  CHECK(exact_measure(Tree::cherry(), gen) == Rational(7, 40));

  ExactMeasure em(gen);
  Rational first = em.measure(cherry_and_leaf());
  CHECK(em.cache_size() > 0);
  std::size_t seen = em.cache_size();
  CHECK(em.measure(cherry_and_leaf()) == first);
  CHECK(em.cache_size() == seen);
}

TEST_CASE("the fair-coin product measure matches the critical measure") {
  CHECK(gw_product_measure(Tree::single_edge()) == Rational(1, 2));
  CHECK(gw_product_measure(Tree::cherry()) == Rational(1, 8));
  CHECK(gw_product_measure(cherry_and_leaf()) == Rational(1, 16));
  CHECK(gw_product_measure(double_cherry()) == Rational(1, 128));
  CHECK_THROWS_AS(gw_product_measure(Tree::empty()), StructureError);

  ExactParams crit = ExactParams::critical(Rational(2));
  for (int n = 1; n <= 6; ++n)
    for (const Tree& t : shapes_with_leaf_count(n))
      CHECK(gw_product_measure(t) == exact_measure(t, crit));

  // All shapes with four leaves together carry Catalan(3) plane trees.
  Rational four(0);
  for (const Tree& t : shapes_with_leaf_count(4)) four += gw_product_measure(t);
  CHECK(four == Rational(5, 128));
}

TEST_CASE("shape enumeration by leaf count") {
  const std::vector<std::size_t> wedderburn = {1, 1, 1, 2, 3, 6, 11, 23, 46};
  for (int n = 1; n <= 9; ++n) {
    auto shapes = shapes_with_leaf_count(n);
    CHECK(shapes.size() == wedderburn[static_cast<std::size_t>(n - 1)]);
    std::string prev;
    for (const Tree& t : shapes) {
      CHECK(t.leaf_count() == static_cast<std::size_t>(n));
      std::string code = canonical_code(t);
      CHECK(code > prev);  // strictly sorted, hence distinct
      prev = code;
    }
  }
  CHECK_THROWS_AS(shapes_with_leaf_count(0), ParameterError);
  CHECK_THROWS_AS(shapes_with_leaf_count(13), ParameterError);
}

TEST_CASE("codes round-trip through trees") {
  for (int n = 1; n <= 7; ++n)
    for (const Tree& t : shapes_with_leaf_count(n)) {
      std::string code = canonical_code(t);
      CHECK(canonical_code(tree_from_code(code)) == code);
    }
  CHECK_THROWS_AS(tree_from_code(""), ParseError);
  CHECK_THROWS_AS(tree_from_code("X"), ParseError);
  CHECK_THROWS_AS(tree_from_code("(L"), ParseError);
  CHECK_THROWS_AS(tree_from_code("(L,L"), ParseError);
  CHECK_THROWS_AS(tree_from_code("(L,L))"), ParseError);
  CHECK_THROWS_AS(tree_from_code("LL"), ParseError);
  CHECK_THROWS_AS(tree_from_code("(L,L,L)"), ParseError);
}

TEST_CASE("the enumeration table is exact and self-consistent") {
  ExactParams crit = ExactParams::critical(Rational(2));

  Enumeration tiny = enumerate_trees(1, 8, crit);
  CHECK(tiny.mass.size() == 1);
  CHECK(tiny.mass.at("L") == Rational(1, 2));
  CHECK(tiny.total == Rational(1, 2));
  CHECK(tiny.missing_mass() == Rational(1, 2));

  Enumeration head = enumerate_trees(2, 8, crit);
  CHECK(head.mass.size() == 10);
  CHECK(head.total == Rational(1535, 2048));
  CHECK(head.missing_mass() == Rational(513, 2048));
  CHECK(head.order_total[1] == Rational(1, 2));
  CHECK(head.order_total[2] == Rational(511, 2048));
  for (const auto& [code, mass] : head.mass)
    CHECK(exact_measure(tree_from_code(code), crit) == mass);

  ShapeDistribution dist = head.distribution();
  CHECK(dist.total == doctest::Approx(to_double(head.total)));
  CHECK(dist.top(1)[0].first == "L");

  ExactParams slim = ExactParams::critical(Rational(1));
  Enumeration perfect_only = enumerate_trees(3, 3, slim);
  CHECK(perfect_only.mass.size() == 3);
  CHECK(perfect_only.mass.at("L") == Rational(1, 2));
  CHECK(perfect_only.mass.at("(L,L)") == Rational(1, 4));
  CHECK(perfect_only.mass.at("((L,L),(L,L))") == Rational(1, 8));
  CHECK(perfect_only.total == Rational(7, 8));

  ExactParams gen = ExactParams::explicit_seq(Rational(3, 10),
                                              {Rational(1), Rational(1, 2), Rational(2)});
  Enumeration other = enumerate_trees(2, 4, gen);
  for (const auto& [code, mass] : other.mass)
    CHECK(exact_measure(tree_from_code(code), gen) == mass);

  CHECK_THROWS_AS(enumerate_trees(0, 8, crit), ParameterError);
  CHECK_THROWS_AS(enumerate_trees(5, 8, crit), ParameterError);
  CHECK_THROWS_AS(enumerate_trees(2, -1, crit), ParameterError);
}

TEST_CASE("pruned mass agrees with the measure of the image") {
  ExactParams crit = ExactParams::critical(Rational(2));

  PrunedMass nothing = exact_pruned_mass(Tree::empty(), crit, 1e-9);
  CHECK(nothing.value == Rational(1, 2));
  CHECK(nothing.tail_bound == Rational(0));

  // Pruning lands on the single edge exactly when the source has order 2.
  PrunedMass single = exact_pruned_mass(Tree::single_edge(), crit, 1e-10);
  CHECK(rat_abs(single.value - Rational(1, 4)) <= single.tail_bound);
  CHECK(single.tail_bound < Rational(1, 1000000000));

  PrunedMass loose = exact_pruned_mass(Tree::single_edge(), crit, 1e-4);
  CHECK(rat_abs(loose.value - Rational(1, 4)) <= loose.tail_bound);
  CHECK(loose.tail_bound >= single.tail_bound);

  // nu(t) = mu(t) (1 - p) on a handful of shapes, for two parameter sets.
  std::vector<std::string> codes = {"L", "(L,L)", "((L,L),L)", "(((L,L),L),L)",
                                    "((L,L),(L,L))"};
  ExactParams gen = ExactParams::explicit_seq(Rational(3, 10),
                                              {Rational(1), Rational(1, 2), Rational(2)});
  for (const ExactParams& params : {crit, gen}) {
    Rational survive = 1 - params.p();
    for (const std::string& code : codes) {
      Tree t = tree_from_code(code);
      Rational target = exact_measure(t, params) * survive;
      PrunedMass pm = exact_pruned_mass(t, params, 1e-10);
      INFO("code ", code);
      CHECK(rat_abs(pm.value - target) <= pm.tail_bound);
    }
  }

  CHECK_THROWS_AS(exact_pruned_mass(Tree::cherry(), crit, 0.0), ParameterError);
}
