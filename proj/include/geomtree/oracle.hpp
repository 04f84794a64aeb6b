#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "geomtree/stats.hpp"
#include "geomtree/tree.hpp"

namespace geomtree {

using Rational = boost::multiprecision::cpp_rational;

// Accepts "7", "-3/4", "0.35", "2.". Decimal text is read as an exact
// decimal fraction, not as the nearest double.
Rational parse_rational(const std::string& text);

double to_double(const Rational& r);

// Branching parameters held exactly, for sampling-free probability work.
// The running sums S_k are cached on demand; instances are cheap to copy
// and each worker should own one (the cache is not locked).
class ExactParams {
 public:
  static ExactParams critical(const Rational& c);
  static ExactParams explicit_seq(const Rational& p, std::vector<Rational> t,
                                  const Rational& tail_ratio = Rational(0));

  const Rational& p() const { return p_; }
  Rational T(int k) const;
  const Rational& S(int k) const;
  // P(tree order = K) = p (1-p)^{K-1}.
  Rational order_prob(int order) const;
  // P(m side branches in an order-K branch), the Geom(1/S_{K-1}) mass.
  Rational side_count_pmf(int order, int m) const;
  // P(a given side branch has order i), T_{K-i} / (S_{K-1} - 1).
  Rational side_order_prob(int order, int i) const;

 private:
  ExactParams() = default;
  Rational p_;
  std::optional<Rational> critical_c_;
  std::vector<Rational> t_head_;
  Rational tail_ratio_;
  mutable std::vector<Rational> s_cache_;
};

// Exact shape probability under the branching measure, memoized by
// canonical code.  The probability of an unlabeled shape multiplies, per
// branch, the side-count mass and the side-order weights, and doubles at
// every terminal split whose two subtrees differ (two generation outcomes
// collapse onto the same unlabeled shape there).
class ExactMeasure {
 public:
  explicit ExactMeasure(ExactParams params);

  const ExactParams& params() const { return params_; }
  Rational measure(const Tree& t);
  std::size_t cache_size() const { return cache_.size(); }

 private:
  Rational branch_mass(const Tree& t, const std::vector<int>& ord, VertexId top);

  ExactParams params_;
  std::map<std::string, Rational> cache_;
};

Rational exact_measure(const Tree& t, const ExactParams& params);

// Exhaustive shape table for order <= max_order and at most max_side side
// branches per branch.  missing_mass is exact: the measure is normalized,
// so everything not enumerated sits in the order and side-count tails.
struct Enumeration {
  std::map<std::string, Rational> mass;
  std::vector<Rational> order_total;  // [order] -> enumerated mass of that order
  Rational total = 0;

  Rational missing_mass() const { return Rational(1) - total; }
  ShapeDistribution distribution() const;
};

Enumeration enumerate_trees(int max_order, int max_side, const ExactParams& params);

// Probability that pruning lands exactly on t, summed over the preimage
// trees.  The per-branch sums over inserted order-1 side branches are
// truncated once their certified geometric tails drop below tol; the
// accumulated bound is returned.
struct PrunedMass {
  Rational value = 0;
  Rational tail_bound = 0;
};

PrunedMass exact_pruned_mass(const Tree& t, const ExactParams& params, double tol);

// Product measure of the planted binary Galton-Watson tree with fair
// coin offspring: (plane embeddings) / 2^(vertices below the root).
Rational gw_product_measure(const Tree& t);

// Every shape with the given leaf count, sorted by canonical code.
std::vector<Tree> shapes_with_leaf_count(int n_leaves);

// Rebuilds the tree named by a canonical code ("L", "(L,(L,L))", ...).
Tree tree_from_code(const std::string& code);

}  // namespace geomtree
