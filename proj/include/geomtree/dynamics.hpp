#pragma once

#include <cstdint>
#include <vector>

#include "geomtree/ensemble.hpp"
#include "geomtree/params.hpp"
#include "geomtree/rng.hpp"
#include "geomtree/sampler.hpp"
#include "geomtree/tree.hpp"

namespace geomtree {

// Average number of members per order in the evolving forest; x[1..max_order],
// slot 0 unused.
struct StateVector {
  std::vector<double> x;

  int max_order() const { return static_cast<int>(x.size()) - 1; }
  double total() const;
};

// The start-of-time state: x_K = p (1-p)^{K-1}, truncated at kmax.
StateVector initial_state(double p, int kmax);
// Mass beyond the truncation, (1-p)^kmax.
double initial_tail_mass(double p, int kmax);

// Law of the two subtree orders created when a member splits: a member of
// order a+1 leaves the pair (a, a) with probability 1/S_a, and a member of
// order a leaves {a, b} with b < a with probability T_{a-b}/S_{a-1}.
double split_kernel(const TokunagaParams& tp, int a, int b);

// One-step linear evolution x -> x + G (S^{-1} x), truncated to kmax.
// G carries -1 on the diagonal, T_1 + 2 on the first superdiagonal and
// T_2, T_3, ... beyond; S^{-1} scales order K by 1/S_{K-1}.
struct EvolutionOperator {
  int kmax = 0;
  std::vector<double> g;      // row-major, (row-1)*kmax + (col-1)
  std::vector<double> s_inv;  // [K-1] = 1/S_{K-1}

  static EvolutionOperator build(const TokunagaParams& tp, int kmax);
  double g_at(int row, int col) const;
};

StateVector step(const EvolutionOperator& op, const StateVector& x);

// The same step assembled member by member from split_kernel; agrees with
// the matrix route to machine precision.
StateVector step_componentwise(const TokunagaParams& tp, const StateVector& x);

struct InvarianceResidual {
  double l1 = 0.0;
  double tail_bound = 0.0;  // a-priori bound on the truncated part
};

// L1 norm of the one-step drift away from the start-of-time state; zero
// (up to the tail bound) exactly for critical Tokunaga parameters.
InvarianceResidual time_invariance_residual(const TokunagaParams& tp, int kmax);

// Net member mass created in one step from the start-of-time state,
// |2(1-p) - 1| up to truncation; a quick witness that p != 1/2 breaks
// invariance regardless of the coefficients.
InvarianceResidual progeny_mass_gap(const TokunagaParams& tp, int kmax);

// --- Forests under the time shift ----------------------------------------

struct Forest {
  std::vector<Tree> trees;
};

Forest forest_of(Tree t);

// Removes the root edge of every member: order-1 members terminate, any
// other member is replaced by its two principal subtrees, replanted.
Forest time_shift(const Forest& f);

std::vector<std::int64_t> forest_order_counts(const Forest& f);

struct EmpiricalState {
  StateVector mean;
  std::vector<double> se;  // per-coordinate standard errors
  std::int64_t n_samples = 0;
  std::int64_t aborted = 0;
};

// Monte Carlo state vector: sample trees, shift s times, average the
// per-order member counts.
EmpiricalState empirical_state_vector(const TokunagaParams& tp, int s, std::int64_t n_samples,
                                      std::uint64_t seed, int shards = 1,
                                      GenerationLimits limits = {});

// --- Scalar systems behind the invariance residual -----------------------

struct SystemResidual {
  double residual = 0.0;
  double tail_bound = 0.0;
};

// Residual of S_0/S_k = sum_{i>=1} 2^{-i} S_i/S_{k+i}, truncated at kmax
// terms; solved exactly by S_k = c^k.
SystemResidual check_system_S(const TokunagaParams& tp, int kmax, int k);

struct SystemAResult {
  std::vector<double> residuals;  // [n-1] for n = 1..n_max
  double tail_bound = 0.0;
};

// Residuals of sum_{j>=1} 2^{-j} prod_{k=j}^{n+j-1} a_k = prod_{k=0}^{n-1} a_k
// for n = 1..n_max, with the j-sum truncated at j_max; a_k in (0, 1],
// indexed from zero, and solved exactly by constant sequences.
SystemAResult check_system_a(const std::vector<double>& a, int n_max, int j_max);

}  // namespace geomtree
