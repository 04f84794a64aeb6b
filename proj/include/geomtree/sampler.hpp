#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "geomtree/params.hpp"
#include "geomtree/rng.hpp"
#include "geomtree/tree.hpp"

namespace geomtree {

// Geometric sample on {0, 1, 2, ...} with P(X = k) = r (1-r)^k, mean
// (1-r)/r, drawn by inverse transform: floor(log u / log(1-r)) for
// u ~ U(0,1].  r = 1 returns 0 without consuming randomness beyond u.
std::int64_t geom_sample(double r, RngStream& rng);

// Success parameter of a geometric variable after independent Bernoulli(q)
// thinning of its failures: r' = r / (q (1 - r) + r).
double thinned_geometric_param(double r, double q);

struct GenerationLimits {
  // Hard cap on arena size; hitting it raises GenerationAborted.  The
  // critical families have heavy-tailed sizes, so ensembles must be
  // prepared to catch, count and redraw.
  std::size_t max_vertices = 10'000'000;
};

// Draws a random tree by the top-down construction: sample the order
// K (ord - 1 ~ Geom(p)), then grow the order-K branch with Geom(1/S_{K-1})
// side branches attached in trial order from the root side toward the tip,
// each carrying an independent lower-order subtree, and close the tip with
// two independent subtrees of order K - 1.
Tree generate_recursive(const TokunagaParams& tp, RngStream& rng, const GenerationLimits& limits = {});

// Same construction with the order forced (the skeleton-depth conditioning
// mode); the result is distributed as the unconditioned tree given
// ord = K.
Tree generate_with_order(const TokunagaParams& tp, int order, RngStream& rng,
                         const GenerationLimits& limits = {});

enum class ConditioningMode {
  kDirect,     // force the skeleton depth
  kRejection,  // redraw geometric orders until K comes up
};

Tree generate_conditioned(const TokunagaParams& tp, int order, RngStream& rng,
                          ConditioningMode mode = ConditioningMode::kDirect,
                          const GenerationLimits& limits = {});

// One step-by-step realization of the branching dynamics.  The population
// starts with the progenitor; at each instant every order-K member either
// terminates (two order-(K-1) offspring, none for K = 1) or survives and
// sheds one lower-order side member.  Vertex depth equals the time of the
// event that created the vertex, the progenitor sitting at depth 0.
struct ProcessEvent {
  enum class Kind { kTerminateLeaf, kTerminateSplit, kSurviveSideBranch };
  int time = 0;          // instant of the event (>= 1)
  int member_order = 0;  // order of the member the event happened to
  Kind kind = Kind::kTerminateLeaf;
  int side_order = 0;    // order of the shed member, 0 unless kSurviveSideBranch
  VertexId vertex = kNoVertex;  // the member's vertex at time - 1
};

struct ProcessTimeline {
  int initial_order = 0;
  std::vector<ProcessEvent> events;
};

std::pair<Tree, ProcessTimeline> generate_process(const TokunagaParams& tp, RngStream& rng,
                                                  const GenerationLimits& limits = {});

// Planted binary Galton-Watson tree at criticality: every vertex
// independently gets two children or none, each with probability 1/2.
Tree generate_gw_planted(RngStream& rng, const GenerationLimits& limits = {});

// I.i.d. unit-mean exponential lengths for the parental edges, indexed by
// child vertex id (slot 0, the root, is unused and zero).
std::vector<double> decorate_edge_lengths(const Tree& t, RngStream& rng);

}  // namespace geomtree
