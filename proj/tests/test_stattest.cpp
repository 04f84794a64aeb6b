#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <vector>

#include "geomtree/rng.hpp"
#include "geomtree/sampler.hpp"
#include "geomtree/stattest.hpp"

using namespace geomtree;

TEST_CASE("tail probabilities hit the standard table values") {
  // Upper 5% and 1% points of the chi-square distribution.
  CHECK(chi_square_tail(3.841459, 1) == doctest::Approx(0.05).epsilon(1e-4));
  CHECK(chi_square_tail(6.634897, 1) == doctest::Approx(0.01).epsilon(1e-4));
  CHECK(chi_square_tail(5.991465, 2) == doctest::Approx(0.05).epsilon(1e-4));
  CHECK(chi_square_tail(20.090235, 8) == doctest::Approx(0.01).epsilon(1e-4));
  CHECK(chi_square_tail(23.209251, 10) == doctest::Approx(0.01).epsilon(1e-4));
  CHECK(chi_square_tail(70.064895, 100) == doctest::Approx(0.99).epsilon(1e-4));

  CHECK(chi_square_tail(0.0, 4) == 1.0);
  CHECK(chi_square_tail(1e4, 3) < 1e-100);
}

TEST_CASE("two degrees of freedom reduce to a plain exponential") {
  for (double x : {0.1, 1.0, 2.5, 7.0, 30.0})
    CHECK(chi_square_tail(x, 2) == doctest::Approx(std::exp(-x / 2)).epsilon(1e-12));
}

TEST_CASE("tail probability is monotone in the statistic") {
  double prev = 1.0;
  for (double x = 0.5; x < 40.0; x += 0.5) {
    double p = chi_square_tail(x, 5);
    CHECK(p < prev);
    prev = p;
  }
  CHECK_THROWS_AS(chi_square_tail(-1.0, 3), ParameterError);
  CHECK_THROWS_AS(chi_square_tail(1.0, 0), ParameterError);
}

TEST_CASE("goodness of fit on exactly proportional counts") {
  // Counts follow n * 2^-(k+1) exactly; the tail k >= 7 holds the rest.
  std::vector<std::int64_t> counts = {512, 256, 128, 64, 32, 16, 8, 4, 2, 1, 1};
  auto pmf = [](int k) { return std::pow(0.5, k + 1); };
  GofResult r = chi_square_gof(counts, pmf);
  CHECK(r.n == 1024);
  CHECK(r.bins == 8);  // bins 0..6 stay individual, the rest pools
  CHECK(r.df == 7);
  CHECK(r.chi2 == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(r.p_value == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("an empty tail folds into the last regular bin") {
  std::vector<std::int64_t> counts = {25, 25, 25, 25};
  auto pmf = [](int k) { return k < 4 ? 0.25 : 0.0; };
  GofResult r = chi_square_gof(counts, pmf);
  CHECK(r.bins == 4);
  CHECK(r.df == 3);
  CHECK(r.chi2 == doctest::Approx(0.0));
}

TEST_CASE("goodness of fit rejects bad inputs") {
  auto pmf = [](int k) { return k < 2 ? 0.5 : 0.0; };
  CHECK_THROWS_AS(chi_square_gof({0, 0, 0}, pmf), ParameterError);
  CHECK_THROWS_AS(chi_square_gof({1, 1, 0, 0, 0, 5}, pmf), ParameterError);
  // Two observations cannot feed a five-way split.
  auto thin = [](int k) { return k < 100 ? 0.01 : 0.0; };
  CHECK_THROWS_AS(chi_square_gof({1, 1}, thin), ParameterError);
}

TEST_CASE("goodness of fit accepts its own samples and rejects others") {
  RngStream rng(311);
  std::vector<std::int64_t> counts(64, 0);
  for (int i = 0; i < 20000; ++i) {
    std::int64_t k = geom_sample(0.5, rng);
    if (k < 64) ++counts[static_cast<std::size_t>(k)];
  }
  auto right = [](int k) { return std::pow(0.5, k + 1); };
  auto wrong = [](int k) { return 0.6 * std::pow(0.4, k); };
  CHECK(chi_square_gof(counts, right).p_value > 0.01);
  CHECK(chi_square_gof(counts, wrong).p_value < 1e-10);
}

TEST_CASE("independence on a perfectly factorized table") {
  // Margins (600, 400) x (500, 300, 200) over n = 1000.
  std::vector<std::vector<std::int64_t>> table = {{300, 180, 120}, {200, 120, 80}};
  GofResult r = independence_test(table);
  CHECK(r.n == 1000);
  CHECK(r.df == 2);
  CHECK(r.chi2 == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(r.p_value == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("independence rejects a diagonal table") {
  GofResult r = independence_test({{200, 0}, {0, 200}});
  CHECK(r.chi2 == doctest::Approx(400.0));
  CHECK(r.df == 1);
  CHECK(r.p_value < 1e-20);
}

TEST_CASE("sparse trailing categories get pooled") {
  // The last columns are far too thin to stand alone.
  std::vector<std::vector<std::int64_t>> table = {{40, 30, 2, 1, 1}, {35, 28, 1, 1, 1}};
  GofResult r = independence_test(table);
  CHECK(r.df < 4);
  CHECK(r.df >= 1);
  CHECK(r.p_value > 0.01);
}

TEST_CASE("degenerate contingency tables are rejected") {
  CHECK_THROWS_AS(independence_test({}), ParameterError);
  CHECK_THROWS_AS(independence_test({{1, 2}, {1}}), ParameterError);
  CHECK_THROWS_AS(independence_test({{5, 5, 5}}), ParameterError);
  CHECK_THROWS_AS(independence_test({{0, 0}, {0, 0}}), ParameterError);
}
