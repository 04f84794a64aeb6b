#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace geomtree {

// Upper tail of the chi-square distribution: P(X > chi2) with df degrees
// of freedom, computed through the regularized incomplete gamma function.
double chi_square_tail(double chi2, int df);

struct GofResult {
  double chi2 = 0.0;
  int df = 0;
  double p_value = 1.0;
  int bins = 0;
  std::int64_t n = 0;
};

// Chi-square goodness of fit of observed counts (indexed by value from 0)
// against a pmf on {0, 1, ...}.  Values are binned individually while the
// expected count stays >= min_expected and pooled into one tail bin
// beyond; the pmf must be (eventually) decreasing for that cut to make
// sense, which holds for everything tested here.
GofResult chi_square_gof(const std::vector<std::int64_t>& counts,
                         const std::function<double(int)>& pmf, double min_expected = 5.0);

// Chi-square independence test on a two-way contingency table of ordinal
// categories.  Trailing categories are pooled (separately per axis) until
// every expected cell reaches min_expected or the table shrinks to 2x2.
GofResult independence_test(std::vector<std::vector<std::int64_t>> table, double min_expected = 5.0);

}  // namespace geomtree
