#include "geomtree/params.hpp"

#include <cmath>

namespace geomtree {

namespace {
constexpr int kSCacheDepth = 64;
}

TokunagaParams TokunagaParams::critical(double c) {
  if (!(c >= 1.0) || !std::isfinite(c)) throw ParameterError("critical family needs c >= 1");
  TokunagaParams tp;
  tp.p_ = 0.5;
  tp.critical_c_ = c;
  tp.s_cache_.reserve(kSCacheDepth + 1);
  double s = 1.0;
  for (int k = 0; k <= kSCacheDepth; ++k) {
    tp.s_cache_.push_back(s);
    s *= c;
  }
  return tp;
}

TokunagaParams TokunagaParams::explicit_seq(double p, std::vector<double> t, double tail_ratio) {
  if (!(p > 0.0 && p < 1.0)) throw ParameterError("p must lie in (0, 1)");
  for (double v : t) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ParameterError("coefficients must be >= 0");
  }
  if (!(tail_ratio >= 0.0) || !std::isfinite(tail_ratio)) throw ParameterError("tail ratio must be >= 0");
  if (tail_ratio > 0.0 && t.empty()) throw ParameterError("geometric tail needs a leading coefficient");
  TokunagaParams tp;
  tp.p_ = p;
  tp.t_head_ = std::move(t);
  tp.tail_ratio_ = tail_ratio;
  tp.s_cache_.reserve(kSCacheDepth + 1);
  double s = 1.0;
  tp.s_cache_.push_back(s);
  for (int k = 1; k <= kSCacheDepth; ++k) {
    s += tp.T(k);
    tp.s_cache_.push_back(s);
  }
  return tp;
}

double TokunagaParams::T(int k) const {
  if (k < 1) throw ParameterError("coefficient index must be >= 1");
  if (critical_c_) {
    const double c = *critical_c_;
    double v = c - 1.0;
    for (int i = 1; i < k; ++i) v *= c;
    return v;
  }
  const int n = static_cast<int>(t_head_.size());
  if (k <= n) return t_head_[static_cast<std::size_t>(k - 1)];
  if (tail_ratio_ == 0.0 || n == 0) return 0.0;
  double v = t_head_.back();
  for (int i = n; i < k; ++i) v *= tail_ratio_;
  return v;
}

double TokunagaParams::S(int k) const {
  if (k < 0) throw ParameterError("running sum index must be >= 0");
  if (k < static_cast<int>(s_cache_.size())) return s_cache_[static_cast<std::size_t>(k)];
  double s = s_cache_.back();
  for (int i = static_cast<int>(s_cache_.size()); i <= k; ++i) s += T(i);
  return s;
}

double TokunagaParams::termination_prob(int order) const {
  if (order < 1) throw ParameterError("order must be >= 1");
  return 1.0 / S(order - 1);
}

std::vector<double> TokunagaParams::side_order_probs(int order) const {
  if (order < 2) throw ParameterError("side branches need order >= 2");
  const double denom = S(order - 1) - 1.0;
  if (!(denom > 0.0)) {
    throw UndefinedDistributionError("all side-branch coefficients vanish below this order");
  }
  std::vector<double> probs(static_cast<std::size_t>(order - 1));
  for (int i = 1; i < order; ++i) {
    probs[static_cast<std::size_t>(i - 1)] = T(order - i) / denom;
  }
  return probs;
}

}  // namespace geomtree
