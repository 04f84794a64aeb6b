#include "geomtree/sampler.hpp"

#include <cmath>

namespace geomtree {

std::int64_t geom_sample(double r, RngStream& rng) {
  if (!(r > 0.0 && r <= 1.0)) throw ParameterError("geometric parameter must lie in (0, 1]");
  const double u = rng.uniform_open01();
  if (r == 1.0) return 0;
  const double k = std::floor(std::log(u) / std::log1p(-r));
  return static_cast<std::int64_t>(k);
}

double thinned_geometric_param(double r, double q) {
  if (!(r > 0.0 && r <= 1.0) || !(q > 0.0 && q <= 1.0)) {
    throw ParameterError("thinning needs r, q in (0, 1]");
  }
  return r / (q * (1.0 - r) + r);
}

namespace {

// Per-generation scratch: cumulative side-order laws by branch order,
// built lazily so a run only pays for the orders it actually meets.
class SideOrderCdf {
 public:
  explicit SideOrderCdf(const TokunagaParams& tp) : tp_(tp) {}

  int draw(int branch_order, RngStream& rng) {
    const auto& cdf = row_(branch_order);
    const double u = rng.uniform01();
    int last_positive = 1;
    double prev = 0.0;
    for (std::size_t idx = 0; idx < cdf.size(); ++idx) {
      if (cdf[idx] > prev) last_positive = static_cast<int>(idx) + 1;
      if (u < cdf[idx]) return static_cast<int>(idx) + 1;
      prev = cdf[idx];
    }
    return last_positive;  // floating slack lands on the top positive cell
  }

 private:
  const std::vector<double>& row_(int k) {
    if (static_cast<std::size_t>(k) >= rows_.size()) rows_.resize(static_cast<std::size_t>(k) + 1);
    auto& row = rows_[static_cast<std::size_t>(k)];
    if (row.empty()) {
      row = tp_.side_order_probs(k);
      double acc = 0.0;
      for (double& v : row) {
        acc += v;
        v = acc;
      }
    }
    return row;
  }

  const TokunagaParams& tp_;
  std::vector<std::vector<double>> rows_;
};

void check_budget(const TreeBuilder& b, const GenerationLimits& limits) {
  if (b.vertex_count() > limits.max_vertices) {
    throw GenerationAborted("vertex budget exceeded");
  }
}

// An order-K tree contains a complete depth-K skeleton, so it has at least
// 2^K vertices; give up before building when that alone breaks the budget.
void check_order_fits(int order, const GenerationLimits& limits) {
  if (order >= 63 || (1ull << order) > limits.max_vertices) {
    throw GenerationAborted("order too large for the vertex budget");
  }
}

}  // namespace

Tree generate_with_order(const TokunagaParams& tp, int order, RngStream& rng,
                         const GenerationLimits& limits) {
  if (order < 1) throw ParameterError("order must be >= 1");
  check_order_fits(order, limits);
  TreeBuilder b;
  SideOrderCdf cdf(tp);

  // Work item: grow a branch of the given order whose top vertex is a new
  // child of `parent`.  The chain walk draws the side count and the side
  // orders in trial order, attaching root side first; side subtrees and
  // the two tip subtrees become further work items.
  struct Item {
    VertexId parent;
    int order;
  };
  std::vector<Item> work = {{b.root(), order}};
  while (!work.empty()) {
    const Item it = work.back();
    work.pop_back();
    VertexId v = b.add_child(it.parent);
    check_budget(b, limits);
    if (it.order == 1) continue;
    const double q = tp.termination_prob(it.order);
    const std::int64_t m = geom_sample(q, rng);
    for (std::int64_t s = 0; s < m; ++s) {
      work.push_back({v, cdf.draw(it.order, rng)});
      v = b.add_child(v);
      check_budget(b, limits);
    }
    work.push_back({v, it.order - 1});
    work.push_back({v, it.order - 1});
  }
  return b.finish();
}

Tree generate_recursive(const TokunagaParams& tp, RngStream& rng, const GenerationLimits& limits) {
  const int order = 1 + static_cast<int>(geom_sample(tp.p(), rng));
  return generate_with_order(tp, order, rng, limits);
}

Tree generate_conditioned(const TokunagaParams& tp, int order, RngStream& rng,
                          ConditioningMode mode, const GenerationLimits& limits) {
  if (order < 1) throw ParameterError("order must be >= 1");
  if (mode == ConditioningMode::kDirect) return generate_with_order(tp, order, rng, limits);
  for (;;) {
    const int k = 1 + static_cast<int>(geom_sample(tp.p(), rng));
    if (k == order) return generate_with_order(tp, order, rng, limits);
  }
}

std::pair<Tree, ProcessTimeline> generate_process(const TokunagaParams& tp, RngStream& rng,
                                                  const GenerationLimits& limits) {
  ProcessTimeline tl;
  tl.initial_order = 1 + static_cast<int>(geom_sample(tp.p(), rng));
  check_order_fits(tl.initial_order, limits);

  TreeBuilder b;
  SideOrderCdf cdf(tp);
  struct Member {
    VertexId vertex;
    int order;
  };
  std::vector<Member> alive = {{b.add_child(b.root()), tl.initial_order}};
  std::vector<Member> next;
  for (int s = 1; !alive.empty(); ++s) {
    next.clear();
    for (const Member m : alive) {
      ProcessEvent ev;
      ev.time = s;
      ev.member_order = m.order;
      ev.vertex = m.vertex;
      const double q = tp.termination_prob(m.order);
      if (rng.bernoulli(q)) {
        if (m.order == 1) {
          ev.kind = ProcessEvent::Kind::kTerminateLeaf;
        } else {
          ev.kind = ProcessEvent::Kind::kTerminateSplit;
          next.push_back({b.add_child(m.vertex), m.order - 1});
          next.push_back({b.add_child(m.vertex), m.order - 1});
          check_budget(b, limits);
        }
      } else {
        ev.kind = ProcessEvent::Kind::kSurviveSideBranch;
        ev.side_order = cdf.draw(m.order, rng);
        const VertexId cont = b.add_child(m.vertex);
        const VertexId side = b.add_child(m.vertex);
        check_budget(b, limits);
        next.push_back({cont, m.order});
        next.push_back({side, ev.side_order});
      }
      tl.events.push_back(ev);
    }
    alive.swap(next);
  }
  return {b.finish(), std::move(tl)};
}

Tree generate_gw_planted(RngStream& rng, const GenerationLimits& limits) {
  TreeBuilder b;
  std::vector<VertexId> work = {b.add_child(b.root())};
  while (!work.empty()) {
    const VertexId v = work.back();
    work.pop_back();
    if (rng.bernoulli(0.5)) continue;  // leaf
    work.push_back(b.add_child(v));
    work.push_back(b.add_child(v));
    check_budget(b, limits);
  }
  return b.finish();
}

std::vector<double> decorate_edge_lengths(const Tree& t, RngStream& rng) {
  std::vector<double> len(t.vertex_count(), 0.0);
  for (std::size_t i = 1; i < len.size(); ++i) len[i] = rng.exponential(1.0);
  return len;
}

}  // namespace geomtree
