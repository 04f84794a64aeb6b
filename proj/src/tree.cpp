#include "geomtree/tree.hpp"

#include <algorithm>

namespace geomtree {

Tree Tree::single_edge() {
  TreeBuilder b;
  b.add_child(b.root());
  return b.finish();
}

Tree Tree::cherry() {
  TreeBuilder b;
  VertexId p = b.add_child(b.root());
  b.add_child(p);
  b.add_child(p);
  return b.finish();
}

std::size_t Tree::leaf_count() const {
  std::size_t n = 0;
  for (std::size_t i = 1; i < verts_.size(); ++i) {
    if (verts_[i].is_leaf()) ++n;
  }
  return n;
}

VertexId TreeBuilder::add_child(VertexId parent) {
  Vertex& p = verts_.at(static_cast<std::size_t>(parent));
  int slot;
  if (p.child[0] == kNoVertex) {
    slot = 0;
  } else if (p.child[1] == kNoVertex) {
    slot = 1;
  } else {
    throw StructureError("vertex already has two children");
  }
  if (parent == 0 && slot == 1) throw StructureError("root may have only one child");
  const VertexId id = static_cast<VertexId>(verts_.size());
  verts_.push_back(Vertex{parent, {kNoVertex, kNoVertex}});
  verts_[static_cast<std::size_t>(parent)].child[slot] = id;
  return id;
}

Tree TreeBuilder::finish() {
  for (std::size_t i = 1; i < verts_.size(); ++i) {
    if (verts_[i].child_count() == 1) {
      throw StructureError("vertex " + std::to_string(i) + " has exactly one child");
    }
  }
  return Tree(std::move(verts_));
}

Tree Tree::from_arena(const std::vector<Vertex>& verts, VertexId root) {
  const std::size_t n = verts.size();
  if (root < 0 || static_cast<std::size_t>(root) >= n) throw StructureError("root out of range");
  const Vertex& r = verts[static_cast<std::size_t>(root)];
  if (r.parent != kNoVertex) throw StructureError("root has a parent");
  if (r.child_count() > 1) throw StructureError("root has two children; tree is not planted");

  auto check_child = [&](VertexId a, VertexId c) {
    if (c < 0 || static_cast<std::size_t>(c) >= n) throw StructureError("child id out of range");
    if (verts[static_cast<std::size_t>(c)].parent != a) {
      throw StructureError("parent/child links disagree at vertex " + std::to_string(c));
    }
  };

  // Renumber by a rooted traversal; a well-formed arena is visited exactly
  // once per vertex, which also rules out cycles and disconnected parts.
  std::vector<VertexId> old_of_new;
  old_of_new.reserve(n);
  std::vector<VertexId> stack = {root};
  while (!stack.empty()) {
    const VertexId u = stack.back();
    stack.pop_back();
    old_of_new.push_back(u);
    const Vertex& vu = verts[static_cast<std::size_t>(u)];
    if (u != root && vu.child_count() == 1) {
      throw StructureError("vertex " + std::to_string(u) + " has exactly one child");
    }
    for (int s = 1; s >= 0; --s) {
      if (vu.child[s] != kNoVertex) {
        check_child(u, vu.child[s]);
        stack.push_back(vu.child[s]);
      }
    }
  }
  if (old_of_new.size() != n) throw StructureError("arena is not connected to the root");

  std::vector<VertexId> new_of_old(n);
  for (std::size_t i = 0; i < n; ++i) new_of_old[static_cast<std::size_t>(old_of_new[i])] = static_cast<VertexId>(i);

  std::vector<Vertex> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vertex& src = verts[static_cast<std::size_t>(old_of_new[i])];
    Vertex& dst = out[i];
    dst.parent = src.parent == kNoVertex ? kNoVertex : new_of_old[static_cast<std::size_t>(src.parent)];
    for (int s = 0; s < 2; ++s) {
      dst.child[s] = src.child[s] == kNoVertex ? kNoVertex : new_of_old[static_cast<std::size_t>(src.child[s])];
    }
  }
  return Tree(std::move(out));
}

namespace {

// Pruning in two sweeps over the parent < child layout.  The descending
// sweep resolves, for every vertex, which vertex of the pruned tree its
// subtree contributes (kNoVertex if the whole subtree is erased; itself if
// it becomes a leaf or keeps both children; the surviving child's
// representative if it gets series-reduced).  The ascending rebuild then
// copies just the representatives.
Tree prune_impl(const Tree& t) {
  if (t.is_empty()) return Tree();
  const auto& vs = t.vertices();
  const std::size_t n = vs.size();
  std::vector<VertexId> rep(n, kNoVertex);
  for (std::size_t i = n; i-- > 1;) {
    const Vertex& v = vs[i];
    if (v.is_leaf()) continue;  // erased
    const VertexId a = rep[static_cast<std::size_t>(v.child[0])];
    const VertexId b = rep[static_cast<std::size_t>(v.child[1])];
    if (a == kNoVertex && b == kNoVertex) {
      rep[i] = static_cast<VertexId>(i);  // fresh leaf
    } else if (a != kNoVertex && b != kNoVertex) {
      rep[i] = static_cast<VertexId>(i);  // keeps both children
    } else {
      rep[i] = a != kNoVertex ? a : b;  // degree two: splice out
    }
  }

  const VertexId top = rep[static_cast<std::size_t>(t.progenitor())];
  if (top == kNoVertex) return Tree();

  TreeBuilder b;
  b.reserve(n / 2 + 1);
  std::vector<std::pair<VertexId, VertexId>> stack = {{top, b.root()}};
  while (!stack.empty()) {
    auto [old_v, new_parent] = stack.back();
    stack.pop_back();
    const VertexId nv = b.add_child(new_parent);
    const Vertex& ov = vs[static_cast<std::size_t>(old_v)];
    if (ov.is_leaf()) continue;
    const VertexId a = rep[static_cast<std::size_t>(ov.child[0])];
    const VertexId bq = rep[static_cast<std::size_t>(ov.child[1])];
    if (a != kNoVertex && bq != kNoVertex) {
      stack.emplace_back(a, nv);
      stack.emplace_back(bq, nv);
    }
    // else: both children erased, nv is a leaf of the pruned tree.
  }
  return b.finish();
}

}  // namespace

Tree prune(const Tree& t) { return prune_impl(t); }

std::vector<Tree> prune_trajectory(const Tree& t) {
  std::vector<Tree> out;
  out.push_back(t);
  while (!out.back().is_empty()) out.push_back(prune(out.back()));
  return out;
}

int tree_order(const Tree& t) {
  if (t.is_empty()) return 0;
  const auto& vs = t.vertices();
  const std::size_t n = vs.size();
  std::vector<int> ord(n, 0);
  for (std::size_t i = n; i-- > 1;) {
    const Vertex& v = vs[i];
    if (v.is_leaf()) {
      ord[i] = 1;
    } else {
      const int a = ord[static_cast<std::size_t>(v.child[0])];
      const int b = ord[static_cast<std::size_t>(v.child[1])];
      ord[i] = a == b ? a + 1 : std::max(a, b);
    }
  }
  return ord[static_cast<std::size_t>(t.progenitor())];
}

Tree descendant_subtree(const Tree& t, VertexId v) {
  if (t.is_empty() && v == t.root()) return Tree();
  t.at(v);  // bounds check
  if (v == t.root()) return t;
  TreeBuilder b;
  std::vector<std::pair<VertexId, VertexId>> stack = {{v, b.root()}};
  while (!stack.empty()) {
    auto [old_v, new_parent] = stack.back();
    stack.pop_back();
    const VertexId nv = b.add_child(new_parent);
    const Vertex& ov = t.at(old_v);
    if (!ov.is_leaf()) {
      stack.emplace_back(ov.child[0], nv);
      stack.emplace_back(ov.child[1], nv);
    }
  }
  return b.finish();
}

std::pair<Tree, Tree> split_principal(const Tree& t) {
  if (tree_order(t) < 2) throw StructureError("tree has no principal subtrees (order < 2)");
  const Vertex& prog = t.at(t.progenitor());
  return {descendant_subtree(t, prog.child[0]), descendant_subtree(t, prog.child[1])};
}

std::pair<Tree, Tree> principal_subtrees(const Tree& t, RngStream& rng) {
  auto pair = split_principal(t);
  if (rng.bernoulli(0.5)) std::swap(pair.first, pair.second);
  return pair;
}

namespace {

std::string code_below(const Tree& t, VertexId v) {
  // Descending-id sweep of the subtree; children land before parents, so
  // each internal vertex can splice its children's finished codes.
  const auto& vs = t.vertices();
  std::vector<std::string> code(vs.size() - static_cast<std::size_t>(v));
  auto slot = [&](VertexId u) -> std::string& { return code[static_cast<std::size_t>(u - v)]; };
  for (std::size_t i = vs.size(); i-- > static_cast<std::size_t>(v);) {
    const Vertex& u = vs[i];
    std::string& out = code[i - static_cast<std::size_t>(v)];
    if (u.is_leaf()) {
      out = "L";
    } else {
      std::string& a = slot(u.child[0]);
      std::string& b = slot(u.child[1]);
      if (b < a) a.swap(b);
      out.reserve(a.size() + b.size() + 3);
      out += '(';
      out += a;
      out += ',';
      out += b;
      out += ')';
      a.clear();
      a.shrink_to_fit();
      b.clear();
      b.shrink_to_fit();
    }
  }
  return std::move(code[0]);
}

}  // namespace

std::string canonical_code_at(const Tree& t, VertexId v) {
  t.at(v);
  if (v == t.root()) {
    return t.is_empty() ? std::string() : code_below(t, t.progenitor());
  }
  // The id sweep assumes all of v's descendants have larger ids, which
  // holds for every tree this library hands out.
  return code_below(t, v);
}

std::string canonical_code(const Tree& t) { return canonical_code_at(t, t.root()); }

}  // namespace geomtree
