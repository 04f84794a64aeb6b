#include "geomtree/oracle.hpp"

#include <algorithm>
#include <cctype>

#include "geomtree/error.hpp"
#include "geomtree/ordering.hpp"

namespace geomtree {

namespace {

using BigInt = boost::multiprecision::cpp_int;

bool all_digits(const std::string& s) {
  if (s.empty()) return false;
  for (char ch : s)
    if (!std::isdigit(static_cast<unsigned char>(ch))) return false;
  return true;
}

}  // namespace

Rational parse_rational(const std::string& text) {
  std::string s = text;
  s.erase(std::remove_if(s.begin(), s.end(),
                         [](unsigned char ch) { return std::isspace(ch); }),
          s.end());
  if (s.empty()) throw ParameterError("empty rational literal");
  bool negative = false;
  if (s[0] == '+' || s[0] == '-') {
    negative = s[0] == '-';
    s.erase(0, 1);
  }
  Rational value;
  if (auto slash = s.find('/'); slash != std::string::npos) {
    std::string num = s.substr(0, slash);
    std::string den = s.substr(slash + 1);
    if (!all_digits(num) || !all_digits(den))
      throw ParameterError("bad rational literal: " + text);
    BigInt d(den);
    if (d == 0) throw ParameterError("zero denominator: " + text);
    value = Rational(BigInt(num), d);
  } else if (auto dot = s.find('.'); dot != std::string::npos) {
    std::string whole = s.substr(0, dot);
    std::string frac = s.substr(dot + 1);
    if (whole.empty()) whole = "0";
    if (!all_digits(whole) || (!frac.empty() && !all_digits(frac)))
      throw ParameterError("bad rational literal: " + text);
    BigInt scale = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
    value = Rational(BigInt(whole) * scale + (frac.empty() ? BigInt(0) : BigInt(frac)), scale);
  } else {
    if (!all_digits(s)) throw ParameterError("bad rational literal: " + text);
    value = Rational(BigInt(s));
  }
  return negative ? -value : value;
}

double to_double(const Rational& r) { return r.convert_to<double>(); }

ExactParams ExactParams::critical(const Rational& c) {
  if (c < 1) throw ParameterError("critical family needs c >= 1");
  ExactParams ep;
  ep.p_ = Rational(1, 2);
  ep.critical_c_ = c;
  ep.s_cache_.push_back(Rational(1));
  return ep;
}

ExactParams ExactParams::explicit_seq(const Rational& p, std::vector<Rational> t,
                                      const Rational& tail_ratio) {
  if (!(p > 0 && p < 1)) throw ParameterError("p must lie in (0, 1)");
  for (const Rational& v : t)
    if (v < 0) throw ParameterError("coefficients must be >= 0");
  if (tail_ratio < 0) throw ParameterError("tail ratio must be >= 0");
  if (tail_ratio > 0 && t.empty())
    throw ParameterError("geometric tail needs a leading coefficient");
  ExactParams ep;
  ep.p_ = p;
  ep.t_head_ = std::move(t);
  ep.tail_ratio_ = tail_ratio;
  ep.s_cache_.push_back(Rational(1));
  return ep;
}

Rational ExactParams::T(int k) const {
  if (k < 1) throw ParameterError("coefficient index must be >= 1");
  if (critical_c_) {
    Rational v = *critical_c_ - 1;
    for (int i = 1; i < k; ++i) v *= *critical_c_;
    return v;
  }
  const int n = static_cast<int>(t_head_.size());
  if (k <= n) return t_head_[static_cast<std::size_t>(k - 1)];
  if (tail_ratio_ == 0 || n == 0) return Rational(0);
  Rational v = t_head_.back();
  for (int i = n; i < k; ++i) v *= tail_ratio_;
  return v;
}

const Rational& ExactParams::S(int k) const {
  if (k < 0) throw ParameterError("running sum index must be >= 0");
  while (static_cast<int>(s_cache_.size()) <= k) {
    Rational next = s_cache_.back() + T(static_cast<int>(s_cache_.size()));
    s_cache_.push_back(std::move(next));
  }
  return s_cache_[static_cast<std::size_t>(k)];
}

Rational ExactParams::order_prob(int order) const {
  if (order < 1) throw ParameterError("order must be >= 1");
  Rational v = p_;
  for (int i = 1; i < order; ++i) v *= 1 - p_;
  return v;
}

Rational ExactParams::side_count_pmf(int order, int m) const {
  if (order < 2 || m < 0) throw ParameterError("side counts need order >= 2, m >= 0");
  Rational q = Rational(1) / S(order - 1);
  Rational v = q;
  for (int i = 0; i < m; ++i) v *= 1 - q;
  return v;
}

Rational ExactParams::side_order_prob(int order, int i) const {
  if (order < 2 || i < 1 || i >= order)
    throw ParameterError("side order prob needs 1 <= i < order, order >= 2");
  Rational denom = S(order - 1) - 1;
  if (denom == 0)
    throw UndefinedDistributionError("all side-branch coefficients vanish below this order");
  return T(order - i) / denom;
}

ExactMeasure::ExactMeasure(ExactParams params) : params_(std::move(params)) {}

Rational ExactMeasure::branch_mass(const Tree& t, const std::vector<int>& ord, VertexId top) {
  std::string code = canonical_code_at(t, top);
  if (auto it = cache_.find(code); it != cache_.end()) return it->second;

  const int order = ord[static_cast<std::size_t>(top)];
  Rational g(1);
  if (order >= 2) {
    const bool sides_possible = params_.S(order - 1) != 1;
    VertexId v = top;
    int m = 0;
    while (true) {
      const Vertex& vx = t.at(v);
      VertexId a = vx.child[0];
      VertexId b = vx.child[1];
      if (ord[static_cast<std::size_t>(a)] == ord[static_cast<std::size_t>(b)]) {
        g *= branch_mass(t, ord, a) * branch_mass(t, ord, b);
        if (canonical_code_at(t, a) != canonical_code_at(t, b)) g *= 2;
        g *= params_.side_count_pmf(order, m);
        break;
      }
      VertexId cont = ord[static_cast<std::size_t>(a)] == order ? a : b;
      VertexId side = cont == a ? b : a;
      if (!sides_possible) {
        g = 0;
        break;
      }
      g *= params_.side_order_prob(order, ord[static_cast<std::size_t>(side)]) *
           branch_mass(t, ord, side);
      ++m;
      v = cont;
    }
  }
  cache_.emplace(std::move(code), g);
  return g;
}

Rational ExactMeasure::measure(const Tree& t) {
  std::vector<int> ord;
  int order = compute_orders_into(t, ord);
  if (order < 1) throw StructureError("the empty tree carries no measure");
  return params_.order_prob(order) * branch_mass(t, ord, t.progenitor());
}

Rational exact_measure(const Tree& t, const ExactParams& params) {
  ExactMeasure em(params);
  return em.measure(t);
}

ShapeDistribution Enumeration::distribution() const {
  ShapeDistribution d;
  for (const auto& [code, w] : mass) d.add(code, to_double(w));
  return d;
}

Enumeration enumerate_trees(int max_order, int max_side, const ExactParams& params) {
  if (max_order < 1 || max_order > 4)
    throw ParameterError("enumeration supports max_order 1..4");
  if (max_side < 0) throw ParameterError("max_side must be >= 0");
  constexpr std::size_t kShapeBudget = 200000;

  // fam[k]: shape code -> conditional probability given tree order k.
  std::vector<std::map<std::string, Rational>> fam(static_cast<std::size_t>(max_order) + 1);
  fam[1]["L"] = 1;
  std::size_t emitted = 1;

  for (int order = 2; order <= max_order; ++order) {
    std::vector<std::pair<std::string, Rational>> side_choices;
    if (params.S(order - 1) != 1) {
      for (int i = 1; i < order; ++i) {
        Rational pi = params.side_order_prob(order, i);
        if (pi == 0) continue;
        for (const auto& [code, g] : fam[static_cast<std::size_t>(i)])
          if (g != 0) side_choices.emplace_back(code, pi * g);
      }
    }

    auto& out = fam[static_cast<std::size_t>(order)];
    auto emit_chain = [&](const auto& self, const std::string& code, const Rational& core,
                          int m) -> void {
      if (++emitted > kShapeBudget) throw Error("enumeration budget exceeded");
      out[code] = params.side_count_pmf(order, m) * core;
      if (m == max_side) return;
      for (const auto& [scode, sfactor] : side_choices) {
        const std::string& lo = code < scode ? code : scode;
        const std::string& hi = code < scode ? scode : code;
        self(self, "(" + lo + "," + hi + ")", core * sfactor, m + 1);
      }
    };

    const auto& below = fam[static_cast<std::size_t>(order - 1)];
    for (auto a = below.begin(); a != below.end(); ++a) {
      for (auto b = a; b != below.end(); ++b) {
        Rational core = a->second * b->second;
        if (a != b) core *= 2;
        emit_chain(emit_chain, "(" + a->first + "," + b->first + ")", core, 0);
      }
    }
  }

  Enumeration e;
  e.order_total.assign(static_cast<std::size_t>(max_order) + 1, Rational(0));
  for (int order = 1; order <= max_order; ++order) {
    Rational po = params.order_prob(order);
    for (const auto& [code, g] : fam[static_cast<std::size_t>(order)]) {
      Rational w = po * g;
      e.mass[code] = w;
      e.order_total[static_cast<std::size_t>(order)] += w;
      e.total += w;
    }
  }
  return e;
}

namespace {

// Sum over the number of fresh order-1 side branches an order-(k+1)
// preimage branch may carry: sum_l C(m+l, l) q (1-q)^{m+l} beta^l with
// q = 1/S_k and beta the preimage weight of an order-1 side.  The term
// ratio tends to (1-q) beta = T_k/S_k < 1, so the tail is certified
// geometrically.
Rational inserted_leaf_sum(const ExactParams& params, int k, int m, const Rational& tol,
                           Rational& tail_accum) {
  const Rational& s = params.S(k);
  if (s == 1) return m == 0 ? Rational(1) : Rational(0);
  Rational beta = params.side_order_prob(k + 1, 1);
  Rational term = params.side_count_pmf(k + 1, m);  // l = 0
  Rational sum = term;
  if (beta == 0) return sum;
  const Rational one_minus_q = 1 - Rational(1) / s;
  for (int l = 0;; ++l) {
    if (l > 200000) throw Error("pruned-mass tail not certifiable within budget");
    term *= Rational(m + l + 1, l + 1) * one_minus_q * beta;
    // Terms beyond the next are bounded by a geometric series with this ratio.
    Rational ratio = Rational(m + l + 2, l + 2) * one_minus_q * beta;
    if (ratio < 1) {
      Rational tail = term * ratio / (1 - ratio);
      if (tail < tol) {
        sum += term;
        tail_accum += tail;
        return sum;
      }
    }
    sum += term;
  }
}

Rational pruned_branch(const Tree& t, const std::vector<int>& ord, VertexId top,
                       const ExactParams& params, const Rational& tol, Rational& tail_accum) {
  const int order = ord[static_cast<std::size_t>(top)];
  Rational factor(1);
  int m = 0;
  if (order >= 2) {
    VertexId v = top;
    while (true) {
      const Vertex& vx = t.at(v);
      VertexId a = vx.child[0];
      VertexId b = vx.child[1];
      if (ord[static_cast<std::size_t>(a)] == ord[static_cast<std::size_t>(b)]) {
        factor *= pruned_branch(t, ord, a, params, tol, tail_accum) *
                  pruned_branch(t, ord, b, params, tol, tail_accum);
        if (canonical_code_at(t, a) != canonical_code_at(t, b)) factor *= 2;
        break;
      }
      VertexId cont = ord[static_cast<std::size_t>(a)] == order ? a : b;
      VertexId side = cont == a ? b : a;
      // A side of order i in the image came from one of order i+1.
      if (params.S(order) == 1) return Rational(0);
      factor *= params.side_order_prob(order + 1, ord[static_cast<std::size_t>(side)] + 1) *
                pruned_branch(t, ord, side, params, tol, tail_accum);
      if (factor == 0) return factor;
      ++m;
      v = cont;
    }
  }
  if (factor == 0) return factor;
  return factor * inserted_leaf_sum(params, order, m, tol, tail_accum);
}

}  // namespace

PrunedMass exact_pruned_mass(const Tree& t, const ExactParams& params, double tol) {
  if (!(tol > 0.0)) throw ParameterError("tolerance must be positive");
  PrunedMass out;
  if (t.is_empty()) {
    // Pruning erases exactly the order-1 trees.
    out.value = params.p();
    return out;
  }
  std::vector<int> ord;
  int order = compute_orders_into(t, ord);

  std::int64_t n_branches = 0;
  for (VertexId v = 1; v < static_cast<VertexId>(t.vertex_count()); ++v) {
    VertexId parent = t.at(v).parent;
    if (parent == t.root() || ord[static_cast<std::size_t>(parent)] != ord[static_cast<std::size_t>(v)])
      ++n_branches;
  }
  Rational tol_each = Rational(tol) / n_branches;
  Rational tail_accum(0);
  Rational value =
      params.order_prob(order + 1) * pruned_branch(t, ord, t.progenitor(), params, tol_each, tail_accum);
  out.value = value;
  out.tail_bound = tail_accum;
  return out;
}

Rational gw_product_measure(const Tree& t) {
  if (t.is_empty()) throw StructureError("the empty tree carries no measure");
  std::size_t n_below = t.vertex_count() - 1;
  int asymmetric = 0;
  for (VertexId v = 1; v < static_cast<VertexId>(t.vertex_count()); ++v) {
    const Vertex& vx = t.at(v);
    if (vx.is_leaf()) continue;
    if (canonical_code_at(t, vx.child[0]) != canonical_code_at(t, vx.child[1])) ++asymmetric;
  }
  BigInt denom = BigInt(1) << n_below;
  return Rational(BigInt(1) << asymmetric, denom);
}

namespace {

VertexId copy_subtree(TreeBuilder& b, VertexId at, const Tree& src, VertexId src_v) {
  VertexId nv = b.add_child(at);
  const Vertex& sv = src.at(src_v);
  if (!sv.is_leaf()) {
    copy_subtree(b, nv, src, sv.child[0]);
    copy_subtree(b, nv, src, sv.child[1]);
  }
  return nv;
}

Tree graft_pair(const Tree& a, const Tree& b) {
  TreeBuilder builder;
  builder.reserve(a.vertex_count() + b.vertex_count());
  VertexId prog = builder.add_child(builder.root());
  copy_subtree(builder, prog, a, a.progenitor());
  copy_subtree(builder, prog, b, b.progenitor());
  return builder.finish();
}

}  // namespace

std::vector<Tree> shapes_with_leaf_count(int n_leaves) {
  if (n_leaves < 1) throw ParameterError("need at least one leaf");
  if (n_leaves > 12) throw ParameterError("leaf-count enumeration capped at 12");
  std::vector<std::vector<Tree>> by_count(static_cast<std::size_t>(n_leaves) + 1);
  by_count[1].push_back(Tree::single_edge());
  for (int n = 2; n <= n_leaves; ++n) {
    auto& out = by_count[static_cast<std::size_t>(n)];
    for (int a = 1; 2 * a <= n; ++a) {
      const auto& left = by_count[static_cast<std::size_t>(a)];
      const auto& right = by_count[static_cast<std::size_t>(n - a)];
      for (std::size_t i = 0; i < left.size(); ++i) {
        std::size_t j0 = (a == n - a) ? i : 0;
        for (std::size_t j = j0; j < right.size(); ++j)
          out.push_back(graft_pair(left[i], right[j]));
      }
    }
    std::sort(out.begin(), out.end(), [](const Tree& x, const Tree& y) {
      return canonical_code(x) < canonical_code(y);
    });
  }
  return by_count[static_cast<std::size_t>(n_leaves)];
}

namespace {

void build_from_code(TreeBuilder& b, VertexId at, const std::string& code, std::size_t& pos) {
  if (pos >= code.size()) throw ParseError("truncated shape code", pos);
  VertexId v = b.add_child(at);
  if (code[pos] == 'L') {
    ++pos;
    return;
  }
  if (code[pos] != '(') throw ParseError("expected 'L' or '(' in shape code", pos);
  ++pos;
  build_from_code(b, v, code, pos);
  if (pos >= code.size() || code[pos] != ',') throw ParseError("expected ',' in shape code", pos);
  ++pos;
  build_from_code(b, v, code, pos);
  if (pos >= code.size() || code[pos] != ')') throw ParseError("expected ')' in shape code", pos);
  ++pos;
}

}  // namespace

Tree tree_from_code(const std::string& code) {
  TreeBuilder builder;
  std::size_t pos = 0;
  build_from_code(builder, builder.root(), code, pos);
  if (pos != code.size()) throw ParseError("trailing characters after shape code", pos);
  return builder.finish();
}

}  // namespace geomtree
