#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "geomtree/ensemble.hpp"
#include "geomtree/ordering.hpp"
#include "geomtree/params.hpp"
#include "geomtree/sampler.hpp"
#include "geomtree/stattest.hpp"
#include "geomtree/tree.hpp"

namespace geomtree {

// Pooled ratio-of-sums estimates T̂_{i,j} = (side branches of order i inside
// order-j branches, summed over the ensemble) / (order-j branches).  Cells
// with no observed order-j branch are undefined.
struct TokunagaMatrix {
  BranchCounts counts;
  std::int64_t n_trees = 0;

  int max_order() const;
  std::optional<double> cell(int i, int j) const;
  std::int64_t branch_count(int j) const;
  std::int64_t side_count(int i, int j) const;
};

TokunagaMatrix tokunaga_from_counts(BranchCounts counts, std::int64_t n_trees);
TokunagaMatrix estimate_tokunaga(std::span<const Tree> ensemble);

// Checks that estimates depend on (i, j) only through the gap j - i:
// per diagonal, max |cell - diagonal mean| / diagonal mean.  Cells backed
// by fewer than min_branches order-j branches are left out.
struct GapReport {
  bool toeplitz = true;
  double max_relative_spread = 0.0;
  std::map<int, double> spread_by_gap;
  std::map<int, double> mean_by_gap;
};

GapReport tokunaga_gap_spread(const TokunagaMatrix& tm, double tol,
                              std::int64_t min_branches = 0);

// Least-squares fit of log T̂_k against k - 1, pooling each diagonal by
// ratio of sums first.  residual is the rms of log-scale residuals.
struct TokunagaFit {
  double a = 0.0;
  double c = 0.0;
  double residual = 0.0;
  int gaps_used = 0;
};

TokunagaFit fit_tokunaga(const TokunagaMatrix& tm, std::int64_t min_branches = 0);

// --- Shape distributions -------------------------------------------------

// Canonical shape key.  Trees beyond max_code_vertices fall into coarse
// size buckets ("#<vertex count>"); any single shape that large carries
// negligible mass, so the buckets never reach the reported head.
std::string shape_key(const Tree& t, std::size_t max_code_vertices = 1024);

struct ShapeDistribution {
  std::map<std::string, double> mass;
  double total = 0.0;

  void add(const std::string& key, double weight = 1.0);
  void merge(const ShapeDistribution& other);
  // Heaviest k shapes, ties broken by key, with normalized probabilities.
  std::vector<std::pair<std::string, double>> top(int k) const;
};

// Total variation distance restricted to the union of the two top-k sets,
// with all remaining mass lumped into one residual category.
double shape_tv_distance(const ShapeDistribution& a, const ShapeDistribution& b, int top_k);

// --- Horton laws ---------------------------------------------------------

struct HortonAccumulator {
  int order = 0;
  std::int64_t n_trees = 0;
  std::vector<std::int64_t> count_sum;   // [order] -> total branches seen
  std::vector<double> length_sum;        // [order] -> total branch length
  bool have_lengths = true;

  // All trees must share one order; lengths (indexed by child vertex, as
  // produced by decorate_edge_lengths) are optional but all-or-nothing.
  void add(const Tree& t, const std::vector<double>* edge_lengths = nullptr);
  void merge(const HortonAccumulator& other);
};

struct HortonReport {
  int order = 0;
  std::int64_t n_trees = 0;
  std::vector<double> mean_counts;    // [i] = N̄_i, defined for 1..order
  std::vector<double> count_ratios;   // [i] = N̄_i / N̄_{i+1}, 1..order-1
  double r_b_estimate = 0.0;          // mean ratio over the mid-range window
  int window_lo = 0;
  int window_hi = 0;
  std::vector<double> mean_lengths;   // [i] = mean total length of order-i branches
  std::vector<double> length_ratios;  // [i] = mean_lengths[i + 1] / mean_lengths[i]
  std::optional<double> r_r_estimate;
  std::optional<double> d_estimate;   // ln r_b / ln r_r when both are usable
};

HortonReport horton_report(const HortonAccumulator& acc);
HortonReport horton_report(std::span<const Tree> ensemble,
                           std::span<const std::vector<double>> edge_lengths = {});

// Fractal dimension of the critical family with geometric ratio c:
// 1 + ln 2 / ln c (infinite at c = 1).
double fractal_dimension(double c);

// Inverts r_b = 2c; defined only for r_b > 2.
double horton_ratio_to_c(double r_b);

// --- Principal subtree behaviour at criticality --------------------------

// For trees of order >= 2 the two principal subtrees, taken in random
// order, should each look like a fresh tree and be independent.  The two
// order-based tests are restricted to the window of subtree orders whose
// parents comfortably fit the generation budget; outside it the budget's
// censoring, not the branching law, dominates the tail bins.  Conditioning
// on a box window preserves independence of a product law, so the
// restricted tests stay faithful.
struct PrincipalSubtreeReport {
  std::int64_t n_samples = 0;
  std::int64_t aborted = 0;
  GofResult order_gof;           // windowed first-subtree order vs Geometric(p)
  double shape_tv = 0.0;         // first subtree shapes vs fresh samples, top 20
  GofResult independence;        // windowed contingency of the two orders
  double joint_product_tv = 0.0; // exact joint law vs product of marginals
};

PrincipalSubtreeReport principal_subtree_tests(const CriticalTokunaga& fam, std::int64_t n_samples,
                                               std::uint64_t seed, int shards = 1,
                                               GenerationLimits limits = {});

// Exact total variation between the joint law of the randomly ordered
// principal subtree orders and the product of its marginals, truncated at
// max_order (truncation error is reported via the returned tail weight).
double principal_pair_product_gap(const TokunagaParams& tp, int max_order);

}  // namespace geomtree
