#include "geomtree/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include "geomtree/error.hpp"
#include "geomtree/ordering.hpp"

namespace geomtree {

double StateVector::total() const {
  double s = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) s += x[i];
  return s;
}

StateVector initial_state(double p, int kmax) {
  if (!(p > 0.0 && p < 1.0)) throw ParameterError("p must lie in (0, 1)");
  if (kmax < 1) throw ParameterError("truncation order must be >= 1");
  StateVector sv;
  sv.x.assign(static_cast<std::size_t>(kmax) + 1, 0.0);
  double w = p;
  for (int k = 1; k <= kmax; ++k) {
    sv.x[static_cast<std::size_t>(k)] = w;
    w *= 1.0 - p;
  }
  return sv;
}

double initial_tail_mass(double p, int kmax) {
  if (!(p > 0.0 && p < 1.0)) throw ParameterError("p must lie in (0, 1)");
  if (kmax < 1) throw ParameterError("truncation order must be >= 1");
  return std::pow(1.0 - p, kmax);
}

double split_kernel(const TokunagaParams& tp, int a, int b) {
  if (b < 1 || a < b) throw ParameterError("split kernel needs a >= b >= 1");
  if (a == b) return 1.0 / tp.S(a);
  return tp.T(a - b) / tp.S(a - 1);
}

EvolutionOperator EvolutionOperator::build(const TokunagaParams& tp, int kmax) {
  if (kmax < 1) throw ParameterError("truncation order must be >= 1");
  EvolutionOperator op;
  op.kmax = kmax;
  op.g.assign(static_cast<std::size_t>(kmax) * static_cast<std::size_t>(kmax), 0.0);
  op.s_inv.resize(static_cast<std::size_t>(kmax));
  for (int k = 1; k <= kmax; ++k) op.s_inv[static_cast<std::size_t>(k - 1)] = 1.0 / tp.S(k - 1);
  for (int row = 1; row <= kmax; ++row) {
    for (int col = row; col <= kmax; ++col) {
      double v;
      if (col == row) {
        v = -1.0;
      } else if (col == row + 1) {
        v = tp.T(1) + 2.0;
      } else {
        v = tp.T(col - row);
      }
      op.g[static_cast<std::size_t>(row - 1) * static_cast<std::size_t>(kmax) +
           static_cast<std::size_t>(col - 1)] = v;
    }
  }
  return op;
}

double EvolutionOperator::g_at(int row, int col) const {
  if (row < 1 || row > kmax || col < 1 || col > kmax)
    throw ParameterError("operator index out of range");
  return g[static_cast<std::size_t>(row - 1) * static_cast<std::size_t>(kmax) +
           static_cast<std::size_t>(col - 1)];
}

StateVector step(const EvolutionOperator& op, const StateVector& x) {
  if (x.max_order() != op.kmax) throw ParameterError("state and operator dimensions differ");
  std::vector<double> scaled(static_cast<std::size_t>(op.kmax));
  for (int k = 1; k <= op.kmax; ++k)
    scaled[static_cast<std::size_t>(k - 1)] =
        x.x[static_cast<std::size_t>(k)] * op.s_inv[static_cast<std::size_t>(k - 1)];
  StateVector out;
  out.x.assign(x.x.size(), 0.0);
  for (int row = 1; row <= op.kmax; ++row) {
    double acc = x.x[static_cast<std::size_t>(row)];
    for (int col = row; col <= op.kmax; ++col)
      acc += op.g_at(row, col) * scaled[static_cast<std::size_t>(col - 1)];
    out.x[static_cast<std::size_t>(row)] = acc;
  }
  return out;
}

StateVector step_componentwise(const TokunagaParams& tp, const StateVector& x) {
  int kmax = x.max_order();
  if (kmax < 1) throw ParameterError("state must carry at least order 1");
  StateVector out;
  out.x.assign(x.x.size(), 0.0);
  for (int k = 1; k <= kmax; ++k) {
    // Members of order k stay put unless their own root edge splits them,
    // which happens with probability q_{k-1,k-1} (read as 1 at k = 1).
    double leave = k == 1 ? 1.0 : split_kernel(tp, k - 1, k - 1);
    double acc = x.x[static_cast<std::size_t>(k)] * (1.0 - leave);
    if (k + 1 <= kmax)
      acc += 2.0 * x.x[static_cast<std::size_t>(k + 1)] * split_kernel(tp, k, k);
    for (int m = 1; k + m <= kmax; ++m)
      acc += x.x[static_cast<std::size_t>(k + m)] * split_kernel(tp, k + m, k);
    out.x[static_cast<std::size_t>(k)] = acc;
  }
  return out;
}

namespace {

// Everything dropped by the truncation sits in columns beyond kmax; column
// j carries total weight pi_j (1 + 2/S_{j-1}) <= 3 pi_j, so the dropped
// mass is at most 3 (1-p)^kmax.
double drift_tail_bound(const TokunagaParams& tp, int kmax) {
  return 3.0 * std::pow(1.0 - tp.p(), kmax);
}

}  // namespace

InvarianceResidual time_invariance_residual(const TokunagaParams& tp, int kmax) {
  EvolutionOperator op = EvolutionOperator::build(tp, kmax);
  StateVector pi = initial_state(tp.p(), kmax);
  StateVector next = step(op, pi);
  InvarianceResidual r;
  for (int k = 1; k <= kmax; ++k)
    r.l1 += std::abs(next.x[static_cast<std::size_t>(k)] - pi.x[static_cast<std::size_t>(k)]);
  r.tail_bound = drift_tail_bound(tp, kmax);
  return r;
}

InvarianceResidual progeny_mass_gap(const TokunagaParams& tp, int kmax) {
  EvolutionOperator op = EvolutionOperator::build(tp, kmax);
  StateVector pi = initial_state(tp.p(), kmax);
  StateVector next = step(op, pi);
  InvarianceResidual r;
  r.l1 = std::abs(next.total() - pi.total());
  r.tail_bound = drift_tail_bound(tp, kmax) + initial_tail_mass(tp.p(), kmax);
  return r;
}

Forest forest_of(Tree t) {
  Forest f;
  f.trees.push_back(std::move(t));
  return f;
}

Forest time_shift(const Forest& f) {
  Forest out;
  out.trees.reserve(f.trees.size());
  for (const Tree& t : f.trees) {
    int ord = tree_order(t);
    if (ord < 1) throw StructureError("forest member has no progenitor");
    if (ord == 1) continue;
    auto [a, b] = split_principal(t);
    out.trees.push_back(std::move(a));
    out.trees.push_back(std::move(b));
  }
  return out;
}

std::vector<std::int64_t> forest_order_counts(const Forest& f) {
  std::vector<std::int64_t> counts;
  for (const Tree& t : f.trees) {
    int ord = tree_order(t);
    if (ord >= static_cast<int>(counts.size()))
      counts.resize(static_cast<std::size_t>(ord) + 1, 0);
    ++counts[static_cast<std::size_t>(ord)];
  }
  return counts;
}

namespace {

struct StateAccumulator {
  std::vector<std::int64_t> sum;
  std::vector<std::int64_t> sumsq;

  void ensure(std::size_t n) {
    if (sum.size() < n) {
      sum.resize(n, 0);
      sumsq.resize(n, 0);
    }
  }

  void merge(const StateAccumulator& other) {
    ensure(other.sum.size());
    for (std::size_t i = 0; i < other.sum.size(); ++i) {
      sum[i] += other.sum[i];
      sumsq[i] += other.sumsq[i];
    }
  }
};

}  // namespace

EmpiricalState empirical_state_vector(const TokunagaParams& tp, int s, std::int64_t n_samples,
                                      std::uint64_t seed, int shards, GenerationLimits limits) {
  if (s < 0) throw ParameterError("time index must be >= 0");
  if (n_samples < 1) throw ParameterError("need at least one sample");

  EnsembleConfig cfg;
  cfg.n_samples = n_samples;
  cfg.seed = seed;
  cfg.shards = shards;
  cfg.limits = limits;

  auto gen = [&tp, limits](RngStream& rng) { return generate_recursive(tp, rng, limits); };
  auto consume = [s](Tree t, StateAccumulator& acc, RngStream&) {
    Forest f = forest_of(std::move(t));
    for (int i = 0; i < s; ++i) f = time_shift(f);
    std::vector<std::int64_t> counts = forest_order_counts(f);
    acc.ensure(counts.size());
    for (std::size_t k = 1; k < counts.size(); ++k) {
      acc.sum[k] += counts[k];
      acc.sumsq[k] += counts[k] * counts[k];
    }
  };

  EnsembleInfo info;
  StateAccumulator acc = run_ensemble<StateAccumulator>(cfg, gen, consume, &info);

  EmpiricalState est;
  est.n_samples = n_samples;
  est.aborted = info.aborted;
  std::size_t dim = std::max<std::size_t>(acc.sum.size(), 2);
  est.mean.x.assign(dim, 0.0);
  est.se.assign(dim, 0.0);
  double n = static_cast<double>(n_samples);
  for (std::size_t k = 1; k < acc.sum.size(); ++k) {
    double m = static_cast<double>(acc.sum[k]) / n;
    double var = static_cast<double>(acc.sumsq[k]) / n - m * m;
    est.mean.x[k] = m;
    est.se[k] = std::sqrt(std::max(var, 0.0) / n);
  }
  return est;
}

SystemResidual check_system_S(const TokunagaParams& tp, int kmax, int k) {
  if (k < 1 || 2 * k > kmax) throw ParameterError("check_system_S needs 1 <= k <= kmax/2");
  double lhs = tp.S(0) / tp.S(k);
  double rhs = 0.0;
  double w = 1.0;
  for (int i = 1; i <= kmax; ++i) {
    w *= 0.5;
    rhs += w * tp.S(i) / tp.S(k + i);
  }
  SystemResidual r;
  r.residual = std::abs(lhs - rhs);
  r.tail_bound = std::pow(0.5, kmax);  // S_i/S_{k+i} <= 1
  return r;
}

SystemAResult check_system_a(const std::vector<double>& a, int n_max, int j_max) {
  if (n_max < 1 || j_max < 1) throw ParameterError("check_system_a needs n_max, j_max >= 1");
  std::size_t need = static_cast<std::size_t>(n_max) + static_cast<std::size_t>(j_max);
  if (a.size() < need)
    throw ParameterError("sequence too short: need " + std::to_string(need) + " terms");
  for (double v : a)
    if (!(v > 0.0 && v <= 1.0)) throw ParameterError("sequence terms must lie in (0, 1]");

  SystemAResult out;
  out.tail_bound = std::pow(0.5, j_max);
  out.residuals.reserve(static_cast<std::size_t>(n_max));
  for (int n = 1; n <= n_max; ++n) {
    double rhs = 1.0;
    for (int k = 0; k < n; ++k) rhs *= a[static_cast<std::size_t>(k)];
    double lhs = 0.0;
    double w = 1.0;
    for (int j = 1; j <= j_max; ++j) {
      w *= 0.5;
      double prod = 1.0;
      for (int k = j; k <= n + j - 1; ++k) prod *= a[static_cast<std::size_t>(k)];
      lhs += w * prod;
    }
    out.residuals.push_back(std::abs(lhs - rhs));
  }
  return out;
}

}  // namespace geomtree
