#include "geomtree/stattest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "geomtree/error.hpp"

namespace geomtree {

namespace {

// Regularized lower incomplete gamma P(a, x), series expansion.
// Converges quickly for x < a + 1.
double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double term = sum;
  for (int i = 0; i < 1000; ++i) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-15) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Regularized upper incomplete gamma Q(a, x), Lentz continued fraction.
// Converges quickly for x >= a + 1.
double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 1000; ++i) {
    double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-15) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

double regularized_gamma_q(double a, double x) {
  if (!(a > 0.0) || !(x >= 0.0)) throw ParameterError("regularized_gamma_q needs a > 0, x >= 0");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_cf(a, x);
}

}  // namespace

double chi_square_tail(double chi2, int df) {
  if (df < 1) throw ParameterError("chi_square_tail needs df >= 1");
  if (!(chi2 >= 0.0)) throw ParameterError("chi_square_tail needs chi2 >= 0");
  return regularized_gamma_q(0.5 * df, 0.5 * chi2);
}

GofResult chi_square_gof(const std::vector<std::int64_t>& counts,
                         const std::function<double(int)>& pmf, double min_expected) {
  std::int64_t n = 0;
  for (std::int64_t c : counts) {
    if (c < 0) throw ParameterError("negative count");
    n += c;
  }
  if (n == 0) throw ParameterError("chi_square_gof needs at least one observation");

  // Individual bins while expected counts stay comfortable, then one tail.
  std::vector<double> probs;
  double head_prob = 0.0;
  int cut = 0;
  while (true) {
    double pk = pmf(cut);
    if (!(pk >= 0.0) || pk > 1.0) throw ParameterError("pmf value out of range");
    if (static_cast<double>(n) * pk < min_expected) break;
    probs.push_back(pk);
    head_prob += pk;
    ++cut;
    if (cut > 100000) break;
  }
  double tail_prob = 1.0 - head_prob;
  // Fold an underweight tail into the last regular bin.
  while (!probs.empty() && static_cast<double>(n) * tail_prob < min_expected) {
    tail_prob += probs.back();
    probs.pop_back();
    --cut;
  }
  if (probs.empty()) throw ParameterError("sample too small for any regular bin");

  std::vector<std::int64_t> observed(probs.size() + 1, 0);
  for (std::size_t k = 0; k < counts.size(); ++k) {
    std::size_t bin = std::min(k, probs.size());
    observed[bin] += counts[k];
  }

  GofResult r;
  r.n = n;
  r.bins = static_cast<int>(probs.size()) + 1;
  r.df = r.bins - 1;
  probs.push_back(tail_prob);
  for (std::size_t b = 0; b < probs.size(); ++b) {
    double expect = static_cast<double>(n) * probs[b];
    if (expect <= 0.0) {
      if (observed[b] > 0) throw ParameterError("observations in a zero-probability bin");
      continue;
    }
    double diff = static_cast<double>(observed[b]) - expect;
    r.chi2 += diff * diff / expect;
  }
  r.p_value = chi_square_tail(r.chi2, r.df);
  return r;
}

namespace {

void pool_last_row(std::vector<std::vector<std::int64_t>>& t) {
  std::size_t r = t.size();
  for (std::size_t j = 0; j < t[r - 1].size(); ++j) t[r - 2][j] += t[r - 1][j];
  t.pop_back();
}

void pool_last_col(std::vector<std::vector<std::int64_t>>& t) {
  for (auto& row : t) {
    std::size_t c = row.size();
    row[c - 2] += row[c - 1];
    row.pop_back();
  }
}

double min_expected_cell(const std::vector<std::vector<std::int64_t>>& t, double n,
                         const std::vector<double>& row_tot, const std::vector<double>& col_tot) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < t.size(); ++i)
    for (std::size_t j = 0; j < t[i].size(); ++j) m = std::min(m, row_tot[i] * col_tot[j] / n);
  return m;
}

}  // namespace

GofResult independence_test(std::vector<std::vector<std::int64_t>> table, double min_expected) {
  if (table.empty() || table[0].empty()) throw ParameterError("empty contingency table");
  std::size_t ncol = table[0].size();
  for (const auto& row : table)
    if (row.size() != ncol) throw ParameterError("ragged contingency table");

  std::int64_t n = 0;
  for (const auto& row : table)
    for (std::int64_t c : row) {
      if (c < 0) throw ParameterError("negative count");
      n += c;
    }
  if (n == 0) throw ParameterError("independence_test needs at least one observation");

  auto marginals = [&](std::vector<double>& row_tot, std::vector<double>& col_tot) {
    row_tot.assign(table.size(), 0.0);
    col_tot.assign(table[0].size(), 0.0);
    for (std::size_t i = 0; i < table.size(); ++i)
      for (std::size_t j = 0; j < table[i].size(); ++j) {
        row_tot[i] += static_cast<double>(table[i][j]);
        col_tot[j] += static_cast<double>(table[i][j]);
      }
  };

  std::vector<double> row_tot;
  std::vector<double> col_tot;
  marginals(row_tot, col_tot);
  while ((table.size() > 2 || table[0].size() > 2) &&
         min_expected_cell(table, static_cast<double>(n), row_tot, col_tot) < min_expected) {
    // Pool from the sparse end of the sparser axis; categories are ordinal
    // so merging the two highest keeps neighbourhoods intact.
    bool pool_row;
    if (table.size() <= 2) {
      pool_row = false;
    } else if (table[0].size() <= 2) {
      pool_row = true;
    } else {
      pool_row = row_tot.back() <= col_tot.back();
    }
    if (pool_row) {
      pool_last_row(table);
    } else {
      pool_last_col(table);
    }
    marginals(row_tot, col_tot);
  }

  GofResult r;
  r.n = n;
  r.bins = static_cast<int>(table.size() * table[0].size());
  r.df = static_cast<int>((table.size() - 1) * (table[0].size() - 1));
  if (r.df < 1) throw ParameterError("contingency table degenerates to one category");
  for (std::size_t i = 0; i < table.size(); ++i)
    for (std::size_t j = 0; j < table[i].size(); ++j) {
      double expect = row_tot[i] * col_tot[j] / static_cast<double>(n);
      if (expect <= 0.0) continue;
      double diff = static_cast<double>(table[i][j]) - expect;
      r.chi2 += diff * diff / expect;
    }
  r.p_value = chi_square_tail(r.chi2, r.df);
  return r;
}

}  // namespace geomtree
