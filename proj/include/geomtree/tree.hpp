#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "geomtree/error.hpp"
#include "geomtree/rng.hpp"

namespace geomtree {

using VertexId = std::int32_t;
inline constexpr VertexId kNoVertex = -1;

struct Vertex {
  VertexId parent = kNoVertex;
  std::array<VertexId, 2> child = {kNoVertex, kNoVertex};

  bool is_leaf() const { return child[0] == kNoVertex; }
  int child_count() const {
    return (child[0] != kNoVertex ? 1 : 0) + (child[1] != kNoVertex ? 1 : 0);
  }
};

// Finite rooted binary tree, planted and reduced: the root has at most one
// child (its edge is the stem) and every other vertex has zero or two
// children.  The default-constructed tree is the empty tree: a lone root
// and nothing else.
//
// Vertices live in an arena indexed by VertexId; the root is always vertex
// 0.  Trees built by TreeBuilder (and everything this library produces)
// additionally satisfy parent < child for every edge, which the traversal
// code exploits: a single descending index sweep visits children before
// parents.  from_arena() accepts arbitrary labelings and renumbers them
// into that layout.
class Tree {
 public:
  Tree() : verts_(1) {}

  static Tree empty() { return Tree(); }
  static Tree single_edge();
  static Tree cherry();

  // Validates structure (binary, reduced, planted, acyclic, connected) and
  // renumbers vertices so that the root is 0 and parent < child throughout.
  static Tree from_arena(const std::vector<Vertex>& verts, VertexId root);

  VertexId root() const { return 0; }
  VertexId progenitor() const { return verts_[0].child[0]; }
  bool is_empty() const { return verts_[0].child[0] == kNoVertex; }

  std::size_t vertex_count() const { return verts_.size(); }
  std::size_t edge_count() const { return verts_.size() - 1; }
  std::size_t leaf_count() const;

  const Vertex& at(VertexId v) const { return verts_.at(static_cast<std::size_t>(v)); }
  const std::vector<Vertex>& vertices() const { return verts_; }

  bool is_leaf(VertexId v) const { return at(v).is_leaf(); }

 private:
  friend class TreeBuilder;
  explicit Tree(std::vector<Vertex> verts) : verts_(std::move(verts)) {}

  std::vector<Vertex> verts_;
};

// Incremental top-down construction; the samplers and the parser go
// through this.  The builder starts from a lone root and only ever appends
// children, so the parent < child layout holds by construction.  finish()
// checks the cheap invariant (vertex degrees) and hands the arena over.
class TreeBuilder {
 public:
  TreeBuilder() : verts_(1) {}

  void reserve(std::size_t n) { verts_.reserve(n); }

  VertexId root() const { return 0; }
  std::size_t vertex_count() const { return verts_.size(); }

  VertexId add_child(VertexId parent);

  Tree finish();

 private:
  std::vector<Vertex> verts_;
};

// Horton pruning: erase every leaf together with its parental edge, then
// series-reduce the degree-two vertices the erasure left behind.  The root
// is never series-reduced.  Pruning the empty tree gives the empty tree.
Tree prune(const Tree& t);

// The full pruning orbit t, R(t), R^2(t), ..., ending with the first empty
// tree.  Its length is ord(t) + 1.
std::vector<Tree> prune_trajectory(const Tree& t);

// Horton-Strahler order of the whole tree; 0 for the empty tree.
int tree_order(const Tree& t);

// The planted subtree spanned by v, its descendants, and v's parental
// edge.  For the root this is the whole tree.
Tree descendant_subtree(const Tree& t, VertexId v);

// The two planted subtrees hanging off the internal vertex nearest the
// root, in arena order.  Requires ord(t) >= 2.
std::pair<Tree, Tree> split_principal(const Tree& t);

// Same split, but the pair comes back in uniformly random order, which is
// what distributional statements about (T_a, T_b) assume.
std::pair<Tree, Tree> principal_subtrees(const Tree& t, RngStream& rng);

// Canonical shape code: "" for the empty tree, "L" for a leaf, otherwise
// "(" + code(a) + "," + code(b) + ")" with the child codes sorted, applied
// to the progenitor.  Equal codes <=> isomorphic trees.
std::string canonical_code(const Tree& t);

// Canonical code of the subtree rooted at v (the vertex itself, not its
// parental edge).
std::string canonical_code_at(const Tree& t, VertexId v);

}  // namespace geomtree
