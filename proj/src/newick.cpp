#include "geomtree/newick.hpp"

#include <cctype>
#include <cstdlib>
#include <optional>
#include <utility>
#include <vector>

#include "geomtree/error.hpp"

namespace geomtree {

namespace {

// Everything here runs on explicit stacks: generated trees reach depths
// where call recursion would overflow, and serializing a vertex must not
// re-walk its whole subtree (that turns emission quadratic).

class NewickParser {
 public:
  explicit NewickParser(const std::string& text) : text_(text) {}

  ParsedTree parse() {
    TreeBuilder builder;
    std::vector<std::optional<double>> lengths;
    lengths.push_back(std::nullopt);  // root slot
    read_tree(builder, lengths);
    skip_space();
    expect(';');
    skip_space();
    if (pos_ != text_.size()) throw ParseError("trailing characters after ';'", pos_);

    ParsedTree out;
    out.tree = builder.finish();
    out.has_lengths = true;
    for (std::size_t v = 1; v < lengths.size(); ++v)
      if (!lengths[v]) out.has_lengths = false;
    if (out.has_lengths && lengths.size() > 1) {
      out.edge_lengths.assign(lengths.size(), 0.0);
      for (std::size_t v = 1; v < lengths.size(); ++v) out.edge_lengths[v] = *lengths[v];
    } else {
      out.has_lengths = false;
    }
    return out;
  }

 private:
  struct Frame {
    VertexId v = kNoVertex;
    std::size_t open = 0;    // offset of the '(' for error messages
    int children_done = 0;
  };

  // One planted subtree under the builder root.
  void read_tree(TreeBuilder& b, std::vector<std::optional<double>>& lengths) {
    std::vector<Frame> stack;
    bool descend = true;
    VertexId parent = b.root();
    while (true) {
      if (descend) {
        skip_space();
        VertexId v = b.add_child(parent);
        lengths.push_back(std::nullopt);
        if (peek() == '(') {
          stack.push_back({v, pos_, 0});
          ++pos_;
          parent = v;
          continue;  // descend into the first child
        }
        suffix(v, lengths);
        descend = false;  // leaf finished; climb
        continue;
      }
      if (stack.empty()) return;
      Frame& top = stack.back();
      if (top.children_done == 0) {
        skip_space();
        if (peek() == ')')
          throw UnsupportedArityError("internal node with a single child", top.open);
        expect(',');
        top.children_done = 1;
        parent = top.v;
        descend = true;
        continue;
      }
      skip_space();
      if (peek() == ',')
        throw UnsupportedArityError("internal node with more than two children", top.open);
      expect(')');
      suffix(top.v, lengths);
      stack.pop_back();
    }
  }

  // Optional label and optional ":length" after a subtree.
  void suffix(VertexId v, std::vector<std::optional<double>>& lengths) {
    skip_space();
    consume_label();
    skip_space();
    if (peek() == ':') {
      ++pos_;
      lengths[static_cast<std::size_t>(v)] = number();
    }
  }

  void consume_label() {
    while (pos_ < text_.size()) {
      char ch = text_[pos_];
      if (std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '.' || ch == '-' ||
          ch == '\'') {
        ++pos_;
      } else {
        break;
      }
    }
  }

  double number() {
    skip_space();
    const char* begin = text_.c_str() + pos_;
    char* end = nullptr;
    double value = std::strtod(begin, &end);
    if (end == begin) throw ParseError("expected a branch length", pos_);
    pos_ += static_cast<std::size_t>(end - begin);
    return value;
  }

  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  void expect(char ch) {
    if (peek() != ch)
      throw ParseError(std::string("expected '") + ch + "'", pos_);
    ++pos_;
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  const std::string& text_;
  std::size_t pos_ = 0;
};

// Lazily yields the canonical code of the subtree at `start`, one
// character per call, given the already-decided canonical child order.
class CodeStream {
 public:
  CodeStream(const Tree& t, const std::vector<VertexId>& first, VertexId start)
      : t_(t), first_(first) {
    stack_.push_back({start, 0});
  }

  // Next code character, '\0' once exhausted.
  char next() {
    while (!stack_.empty()) {
      Frame& f = stack_.back();
      const Vertex& vx = t_.at(f.v);
      if (vx.is_leaf()) {
        stack_.pop_back();
        return 'L';
      }
      const VertexId lo = first_[static_cast<std::size_t>(f.v)];
      const VertexId hi = lo == vx.child[0] ? vx.child[1] : vx.child[0];
      switch (f.stage++) {
        case 0:
          return '(';
        case 1:
          stack_.push_back({lo, 0});
          break;
        case 2:
          return ',';
        case 3:
          stack_.push_back({hi, 0});
          break;
        default:
          stack_.pop_back();
          return ')';
      }
    }
    return '\0';
  }

 private:
  struct Frame {
    VertexId v;
    int stage;
  };

  const Tree& t_;
  const std::vector<VertexId>& first_;
  std::vector<Frame> stack_;
};

// first[v] = the child of v whose canonical code sorts first.  The
// descending id sweep sees children before parents, so each tandem
// comparison can already rely on the orders below; it stops at the first
// differing character, which keeps the whole pass near-linear.
std::vector<VertexId> canonical_child_order(const Tree& t) {
  const auto& vs = t.vertices();
  std::vector<VertexId> first(vs.size(), kNoVertex);
  for (std::size_t i = vs.size(); i-- > 1;) {
    const Vertex& vx = vs[i];
    if (vx.is_leaf()) continue;
    CodeStream a(t, first, vx.child[0]);
    CodeStream b(t, first, vx.child[1]);
    bool b_first = false;
    while (true) {
      char ca = a.next();
      char cb = b.next();
      if (ca != cb) {
        b_first = cb < ca;
        break;
      }
      if (ca == '\0') break;  // identical subtrees
    }
    first[i] = b_first ? vx.child[1] : vx.child[0];
  }
  return first;
}

}  // namespace

ParsedTree parse_newick(const std::string& text) {
  NewickParser parser(text);
  return parser.parse();
}

std::string emit_newick(const Tree& t) {
  if (t.is_empty()) throw NotRepresentableError("the empty tree has no serialized form");
  const std::vector<VertexId> first = canonical_child_order(t);

  std::string out;
  out.reserve(2 * t.vertex_count() + 2);
  struct Frame {
    VertexId v;
    int stage;
  };
  std::vector<Frame> stack = {{t.progenitor(), 0}};
  while (!stack.empty()) {
    Frame& f = stack.back();
    const Vertex& vx = t.at(f.v);
    if (vx.is_leaf()) {
      out += 'x';
      stack.pop_back();
      continue;
    }
    const VertexId lo = first[static_cast<std::size_t>(f.v)];
    const VertexId hi = lo == vx.child[0] ? vx.child[1] : vx.child[0];
    switch (f.stage++) {
      case 0:
        out += '(';
        stack.push_back({lo, 0});
        break;
      case 1:
        out += ',';
        stack.push_back({hi, 0});
        break;
      default:
        out += ')';
        stack.pop_back();
        break;
    }
  }
  out += ';';
  return out;
}

}  // namespace geomtree
