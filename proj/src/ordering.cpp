#include "geomtree/ordering.hpp"

#include <algorithm>

namespace geomtree {

int compute_orders_into(const Tree& t, std::vector<int>& order_of) {
  const auto& vs = t.vertices();
  const std::size_t n = vs.size();
  order_of.assign(n, 0);
  if (t.is_empty()) return 0;
  for (std::size_t i = n; i-- > 1;) {
    const Vertex& v = vs[i];
    if (v.is_leaf()) {
      order_of[i] = 1;
    } else {
      const int a = order_of[static_cast<std::size_t>(v.child[0])];
      const int b = order_of[static_cast<std::size_t>(v.child[1])];
      order_of[i] = a == b ? a + 1 : std::max(a, b);
    }
  }
  order_of[0] = order_of[static_cast<std::size_t>(t.progenitor())];
  return order_of[0];
}

OrderedTree compute_orders(Tree t) {
  OrderedTree ot;
  ot.tree = std::move(t);
  ot.order = compute_orders_into(ot.tree, ot.order_of);
  if (ot.tree.is_empty()) return ot;

  const Tree& tr = ot.tree;
  const auto& ord = ot.order_of;

  // A non-root vertex starts a branch when its parent does not continue
  // at the same order.  Walking each chain from its top vertex to the tip
  // yields the path and the side-branch orders in root-to-tip direction.
  for (std::size_t i = 1; i < tr.vertex_count(); ++i) {
    const VertexId v = static_cast<VertexId>(i);
    const VertexId p = tr.at(v).parent;
    if (p != tr.root() && ord[static_cast<std::size_t>(p)] == ord[i]) continue;

    Branch b;
    b.order = ord[i];
    VertexId cur = v;
    for (;;) {
      b.vertex_path.push_back(cur);
      const Vertex& vc = tr.at(cur);
      if (vc.is_leaf()) break;
      const int oa = ord[static_cast<std::size_t>(vc.child[0])];
      const int ob = ord[static_cast<std::size_t>(vc.child[1])];
      if (oa == b.order) {
        b.side_branch_orders.push_back(ob);
        cur = vc.child[0];
      } else if (ob == b.order) {
        b.side_branch_orders.push_back(oa);
        cur = vc.child[1];
      } else {
        break;  // tip: both children drop in order
      }
    }
    ot.branches.push_back(std::move(b));
  }
  return ot;
}

BranchStatistics branch_statistics(const OrderedTree& ot) {
  BranchStatistics st;
  const Tree& t = ot.tree;
  for (const Branch& b : ot.branches) {
    st.n_branches[b.order] += 1;
    const VertexId top = b.vertex_path.front();
    const VertexId p = t.at(top).parent;
    if (p == t.root()) continue;
    // The top's parent always has strictly higher order.  The branch is a
    // side branch unless it is one of the two equal-order children that
    // terminate the parent branch.
    const Vertex& pv = t.at(p);
    const VertexId sib = pv.child[0] == top ? pv.child[1] : pv.child[0];
    if (ot.order_of[static_cast<std::size_t>(sib)] != b.order) {
      st.n_side[{b.order, ot.order_of[static_cast<std::size_t>(p)]}] += 1;
    }
  }
  return st;
}

void BranchCounts::ensure_order(int k) {
  if (static_cast<int>(n_branch.size()) <= k) {
    n_branch.resize(static_cast<std::size_t>(k) + 1, 0);
    n_side.resize(static_cast<std::size_t>(k) + 1);
  }
  for (int j = 2; j <= k; ++j) {
    auto& row = n_side[static_cast<std::size_t>(j)];
    if (static_cast<int>(row.size()) < j) row.resize(static_cast<std::size_t>(j), 0);
  }
}

void BranchCounts::merge(const BranchCounts& other) {
  ensure_order(static_cast<int>(other.n_branch.size()) - 1);
  for (std::size_t j = 0; j < other.n_branch.size(); ++j) n_branch[j] += other.n_branch[j];
  for (std::size_t j = 0; j < other.n_side.size(); ++j) {
    for (std::size_t i = 0; i < other.n_side[j].size(); ++i) n_side[j][i] += other.n_side[j][i];
  }
}

int accumulate_branch_counts(const Tree& t, std::vector<int>& order_scratch, BranchCounts& into) {
  const int k = compute_orders_into(t, order_scratch);
  if (k == 0) return 0;
  into.ensure_order(k);
  const auto& vs = t.vertices();
  const auto& ord = order_scratch;

  // Every branch is counted at its top vertex: the child of the root, or
  // a child whose order drops below its parent's.  When the two children
  // of an internal vertex differ in order, the smaller one is a side
  // branch of the parent's order.
  into.n_branch[static_cast<std::size_t>(ord[0])] += 1;  // progenitor's branch
  for (std::size_t i = 1; i < vs.size(); ++i) {
    const Vertex& v = vs[i];
    if (v.is_leaf()) continue;
    const int oa = ord[static_cast<std::size_t>(v.child[0])];
    const int ob = ord[static_cast<std::size_t>(v.child[1])];
    if (oa == ob) {
      into.n_branch[static_cast<std::size_t>(oa)] += 2;
    } else {
      const int lo = std::min(oa, ob);
      const int hi = ord[i];
      into.n_branch[static_cast<std::size_t>(lo)] += 1;
      into.n_side[static_cast<std::size_t>(hi)][static_cast<std::size_t>(lo)] += 1;
    }
  }
  return k;
}

}  // namespace geomtree
