#pragma once

#include <optional>
#include <vector>

#include "geomtree/error.hpp"

namespace geomtree {

// Model parameters: the progenitor order law ord - 1 ~ Geom(p) and the
// nonnegative side-branch coefficients T_1, T_2, ...  The running sums
// S_k = 1 + T_1 + ... + T_k (S_0 = 1) drive everything else: a branch of
// order K terminates with probability 1/S_{K-1} per step, and an order-i
// side branch attaches with probability T_{K-i}/(S_{K-1} - 1).
//
// Immutable after construction and safe to share across threads; S-values
// are precomputed to a fixed depth and extended on the fly past it.
class TokunagaParams {
 public:
  // The self-similar family T_k = (c - 1) c^{k-1} with p = 1/2, for which
  // S_k = c^k.  Requires c >= 1.
  static TokunagaParams critical(double c);

  // Explicit leading coefficients T_1..T_n.  Beyond them the sequence
  // continues with zeros (tail_ratio = 0) or geometrically,
  // T_{n+k} = T_n * tail_ratio^k.
  static TokunagaParams explicit_seq(double p, std::vector<double> t, double tail_ratio = 0.0);

  double p() const { return p_; }
  double T(int k) const;
  double S(int k) const;

  // q_K = 1 / S_{K-1}, the per-step termination probability of an order-K
  // branch.  Requires K >= 1.
  double termination_prob(int order) const;

  // P(side order = i | branch order = K) = T_{K-i} / (S_{K-1} - 1) for
  // 1 <= i < K.  Throws UndefinedDistributionError when S_{K-1} = 1 (no
  // side branches ever occur at that order, so the law is never needed).
  std::vector<double> side_order_probs(int order) const;

  bool is_critical_family() const { return critical_c_.has_value(); }
  double critical_c() const { return critical_c_.value(); }

 private:
  TokunagaParams() = default;

  double p_ = 0.5;
  std::optional<double> critical_c_;
  std::vector<double> t_head_;   // explicit T_1..T_n (empty for critical)
  double tail_ratio_ = 0.0;
  std::vector<double> s_cache_;  // S_0..S_{cache}
};

// Tag for the critical self-similar family; some statistics only make
// sense there and take this instead of general parameters.
struct CriticalTokunaga {
  double c = 2.0;
  TokunagaParams params() const { return TokunagaParams::critical(c); }
};

}  // namespace geomtree
