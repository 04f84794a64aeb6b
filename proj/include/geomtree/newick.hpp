#pragma once

#include <string>
#include <vector>

#include "geomtree/tree.hpp"

namespace geomtree {

// Result of reading a Newick string.  Labels are discarded; branch
// lengths, when the text carries one for every edge, are kept indexed by
// child vertex (slot 0, the root, stays zero).
struct ParsedTree {
  Tree tree;
  std::vector<double> edge_lengths;
  bool has_lengths = false;
};

// Reads a Newick string such as "((x,x),x);" into a planted tree.
// Internal nodes must have exactly two children; labels and lengths are
// accepted anywhere the format allows them.
ParsedTree parse_newick(const std::string& text);

// Unlabeled Newick with "x" leaves and children in canonical-code order,
// so equal shapes serialize identically.
std::string emit_newick(const Tree& t);

}  // namespace geomtree
