#pragma once

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "geomtree/tree.hpp"

namespace geomtree {

// A branch of order j: a maximal chain of adjacent order-j vertices
// together with their parental edges.  vertex_path runs from the root side
// to the tip; side_branch_orders lists, in the same direction, the orders
// of the lower-order branches merging into the chain (one per non-tip
// chain vertex).
struct Branch {
  int order = 0;
  std::vector<VertexId> vertex_path;
  std::vector<int> side_branch_orders;
};

// A tree with its Horton-Strahler orders and branch decomposition.
// order_of is indexed by vertex id; the root carries the tree order.
struct OrderedTree {
  Tree tree;
  std::vector<int> order_of;
  std::vector<Branch> branches;
  int order = 0;
};

// Leaves get order 1; an internal vertex gets max(children) when the two
// child orders differ and child order + 1 when they agree; the root
// inherits the order of its only child.  The empty tree has order 0.
OrderedTree compute_orders(Tree t);

// Orders only, written into a caller-owned buffer; the hot ensemble paths
// use this to skip the per-branch bookkeeping.  Returns the tree order.
int compute_orders_into(const Tree& t, std::vector<int>& order_of);

struct BranchStatistics {
  // n_branches[j] = N_j, the number of branches of order j.
  std::map<int, std::int64_t> n_branches;
  // n_side[{i, j}] = N_{ij}, the number of order-i side branches merging
  // order-j branches (i < j).
  std::map<std::pair<int, int>, std::int64_t> n_side;
};

BranchStatistics branch_statistics(const OrderedTree& ot);

// Flat-array branch counters for ensemble accumulation.  Orders index the
// arrays directly; merging is element-wise addition, so sharded ensembles
// combine associatively.
struct BranchCounts {
  std::vector<std::int64_t> n_branch;             // [j] = N_j, slot 0 unused
  std::vector<std::vector<std::int64_t>> n_side;  // [j][i] = N_{ij}, i < j

  void ensure_order(int k);
  void merge(const BranchCounts& other);
};

// Counts branches and side branches of one tree into `into`, using
// `order_scratch` for the order buffer.  Returns the tree order.
int accumulate_branch_counts(const Tree& t, std::vector<int>& order_scratch, BranchCounts& into);

}  // namespace geomtree
