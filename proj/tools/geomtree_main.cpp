// geomtree: geometric random trees, their branch statistics, the pruning
// and time-shift dynamics, and exact rational cross-checks.
//
// Subcommands: generate, prune, stats, dynamics, invariance, oracle.
// Reports are JSON (stable key order) embedding the config that produced
// them; identical configs give byte-identical output.  invariance and
// oracle are check-mode commands: exit 0 when every requested check
// passes, 1 otherwise.  Configuration mistakes exit 2.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "geomtree/dynamics.hpp"
#include "geomtree/ensemble.hpp"
#include "geomtree/newick.hpp"
#include "geomtree/oracle.hpp"
#include "geomtree/params.hpp"
#include "geomtree/sampler.hpp"
#include "geomtree/stats.hpp"
#include "geomtree/tree.hpp"

namespace {

using nlohmann::ordered_json;

constexpr const char* kVersion = "0.1.0";

int default_shards() {
  const char* env = std::getenv("GEOMTREE_THREADS");
  if (env == nullptr) return 1;
  char* end = nullptr;
  long v = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || v < 1 || v > 256) return 1;
  return static_cast<int>(v);
}

// --- shared flag groups ---------------------------------------------------

// Model parameters: either --c (the self-similar family) or --p with
// --tok T_1,T_2,... and an optional geometric --tail ratio.
struct ParamFlags {
  double c = 2.0;
  double p = 0.5;
  std::vector<double> tok;
  double tail = 0.0;
  CLI::Option* c_opt = nullptr;
  CLI::Option* p_opt = nullptr;
  CLI::Option* tok_opt = nullptr;
  CLI::Option* tail_opt = nullptr;

  void attach(CLI::App* cmd) {
    c_opt = cmd->add_option("--c", c,
                            "self-similar family ratio c >= 1 (p = 1/2, T_k = (c-1) c^(k-1))");
    p_opt = cmd->add_option("--p", p, "progenitor order parameter: ord - 1 ~ Geometric(p)");
    tok_opt = cmd->add_option("--tok", tok, "side-branch coefficients T_1,T_2,...")->delimiter(',');
    tail_opt =
        cmd->add_option("--tail", tail, "ratio continuing --tok geometrically (default: zeros)");
    tok_opt->needs(p_opt);
    tail_opt->needs(tok_opt);
    c_opt->excludes(p_opt);
    c_opt->excludes(tok_opt);
    c_opt->excludes(tail_opt);
  }

  geomtree::TokunagaParams build() const {
    if (c_opt->count() > 0) return geomtree::TokunagaParams::critical(c);
    if (tok_opt->count() == 0)
      throw geomtree::ParameterError("give either --c or --p together with --tok");
    return geomtree::TokunagaParams::explicit_seq(p, tok, tail);
  }

  ordered_json to_json() const {
    ordered_json j;
    if (c_opt->count() > 0) {
      j["family"] = "critical";
      j["c"] = c;
    } else {
      j["family"] = "explicit";
      j["p"] = p;
      j["tok"] = tok;
      j["tail_ratio"] = tail;
    }
    return j;
  }
};

struct EnsembleFlags {
  std::int64_t n = 10000;
  std::uint64_t seed = 1;
  int shards = default_shards();
  std::uint64_t max_vertices = 10'000'000;

  void attach(CLI::App* cmd, std::int64_t default_n) {
    n = default_n;
    cmd->add_option("--n", n, "number of sampled trees")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", seed, "RNG seed; (seed, shards) fully determine the output");
    cmd->add_option("--shards", shards, "worker shards (default: GEOMTREE_THREADS, else 1)")
        ->check(CLI::Range(1, 256));
    cmd->add_option("--max-vertices", max_vertices,
                    "per-tree vertex budget; breaches are redrawn and counted");
  }

  geomtree::EnsembleConfig config() const {
    geomtree::EnsembleConfig cfg;
    cfg.n_samples = n;
    cfg.seed = seed;
    cfg.shards = shards;
    cfg.limits.max_vertices = static_cast<std::size_t>(max_vertices);
    return cfg;
  }

  ordered_json to_json() const {
    ordered_json j;
    j["n"] = n;
    j["seed"] = seed;
    j["shards"] = shards;
    j["max_vertices"] = max_vertices;
    return j;
  }
};

struct OutputFlags {
  std::string path;

  void attach(CLI::App* cmd) {
    cmd->add_option("--out", path, "write the report to this file instead of stdout");
  }

  void write(const std::string& text) const {
    std::string body = text;
    if (body.empty() || body.back() != '\n') body += '\n';
    if (path.empty()) {
      std::cout << body;
      return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw geomtree::Error("cannot open output file: " + path);
    f << body;
  }
};

ordered_json report_for(const std::string& command, ordered_json config) {
  ordered_json j;
  j["command"] = command;
  j["version"] = kVersion;
  j["config"] = std::move(config);
  j["results"] = ordered_json::object();
  return j;
}

ordered_json state_json(const geomtree::StateVector& s) {
  std::vector<double> out;
  if (s.x.size() > 1) out.assign(s.x.begin() + 1, s.x.end());
  return ordered_json(out);
}

std::string rational_str(const geomtree::Rational& r) {
  std::ostringstream os;
  os << r;
  return os.str();
}

ordered_json rational_json(const geomtree::Rational& r) {
  ordered_json j;
  j["exact"] = rational_str(r);
  j["value"] = geomtree::to_double(r);
  return j;
}

// --- generate -------------------------------------------------------------

struct GenerateFlags {
  ParamFlags params;
  OutputFlags out;
  std::int64_t n = 10;
  std::uint64_t seed = 1;
  std::uint64_t max_vertices = 10'000'000;
  int order = 0;
  std::string conditioning = "direct";
  bool plain = false;

  void attach(CLI::App* cmd) {
    params.attach(cmd);
    out.attach(cmd);
    cmd->add_option("--n", n, "number of trees")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", seed, "RNG seed; the same seed gives byte-identical output");
    cmd->add_option("--max-vertices", max_vertices,
                    "per-tree vertex budget; breaches are redrawn and counted");
    cmd->add_option("--order", order, "condition every tree on this order")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--conditioning", conditioning, "conditioning mode when --order is set")
        ->check(CLI::IsMember({"direct", "rejection"}));
    cmd->add_flag("--plain", plain, "emit one Newick string per line instead of a JSON report");
  }
};

int run_generate(const GenerateFlags& fl) {
  geomtree::TokunagaParams tp = fl.params.build();
  geomtree::GenerationLimits limits{static_cast<std::size_t>(fl.max_vertices)};
  const auto mode = fl.conditioning == "rejection" ? geomtree::ConditioningMode::kRejection
                                                   : geomtree::ConditioningMode::kDirect;
  geomtree::RngStream rng(fl.seed);
  std::int64_t aborted = 0;
  auto gen = [&](geomtree::RngStream& r) {
    if (fl.order > 0) return geomtree::generate_conditioned(tp, fl.order, r, mode, limits);
    return geomtree::generate_recursive(tp, r, limits);
  };
  std::vector<std::string> trees;
  trees.reserve(static_cast<std::size_t>(fl.n));
  for (std::int64_t i = 0; i < fl.n; ++i)
    trees.push_back(geomtree::emit_newick(geomtree::sample_with_retry(gen, rng, aborted)));

  if (fl.plain) {
    std::string body;
    for (const auto& s : trees) {
      body += s;
      body += '\n';
    }
    fl.out.write(body);
    return 0;
  }

  ordered_json config = fl.params.to_json();
  config["n"] = fl.n;
  config["seed"] = fl.seed;
  config["max_vertices"] = fl.max_vertices;
  if (fl.order > 0) {
    config["order"] = fl.order;
    config["conditioning"] = fl.conditioning;
  }
  ordered_json rep = report_for("generate", config);
  rep["results"]["trees"] = trees;
  rep["results"]["aborted"] = aborted;
  fl.out.write(rep.dump(2));
  return 0;
}

// --- prune ----------------------------------------------------------------

struct PruneFlags {
  OutputFlags out;
  std::string newick;
  std::string in_path;
  int times = 1;
  bool full = false;
  CLI::Option* newick_opt = nullptr;
  CLI::Option* in_opt = nullptr;

  void attach(CLI::App* cmd) {
    out.attach(cmd);
    newick_opt = cmd->add_option("--newick", newick, "tree to prune, as a Newick string");
    in_opt = cmd->add_option("--in", in_path, "file holding the Newick string")
                 ->check(CLI::ExistingFile);
    newick_opt->excludes(in_opt);
    cmd->add_option("--times", times, "number of prunings to apply")->check(CLI::NonNegativeNumber);
    cmd->add_flag("--full", full, "prune until the tree is empty, ignoring --times");
  }
};

int run_prune(const PruneFlags& fl) {
  std::string text;
  if (fl.newick_opt->count() > 0) {
    text = fl.newick;
  } else if (fl.in_opt->count() > 0) {
    std::ifstream f(fl.in_path, std::ios::binary);
    if (!f) throw geomtree::Error("cannot open input file: " + fl.in_path);
    std::ostringstream ss;
    ss << f.rdbuf();
    text = ss.str();
  } else {
    throw geomtree::ParameterError("give the tree via --newick or --in");
  }

  geomtree::Tree t = geomtree::parse_newick(text).tree;
  ordered_json config;
  config["input"] = geomtree::emit_newick(t);
  config["times"] = fl.full ? ordered_json("full") : ordered_json(fl.times);

  ordered_json rep = report_for("prune", std::move(config));
  rep["results"]["input_order"] = geomtree::tree_order(t);
  ordered_json steps = ordered_json::array();
  int applied = 0;
  while ((fl.full && !t.is_empty()) || (!fl.full && applied < fl.times)) {
    t = geomtree::prune(t);
    ++applied;
    ordered_json entry;
    entry["step"] = applied;
    entry["order"] = geomtree::tree_order(t);
    if (t.is_empty())
      entry["newick"] = nullptr;
    else
      entry["newick"] = geomtree::emit_newick(t);
    steps.push_back(std::move(entry));
    if (t.is_empty()) break;
  }
  rep["results"]["steps"] = std::move(steps);
  fl.out.write(rep.dump(2));
  return 0;
}

// --- stats ----------------------------------------------------------------

struct StatsFlags {
  ParamFlags params;
  EnsembleFlags ensemble;
  OutputFlags out;
  int order = 0;
  bool lengths = false;
  std::int64_t min_branches = 0;
  double spread_tol = 0.1;
  std::string format = "json";

  void attach(CLI::App* cmd) {
    params.attach(cmd);
    ensemble.attach(cmd, 10000);
    out.attach(cmd);
    cmd->add_option("--order", order, "condition every tree on this order (0: unconditioned)")
        ->check(CLI::NonNegativeNumber);
    cmd->add_flag("--lengths", lengths,
                  "decorate edges with unit-mean exponential lengths (needs --order)");
    cmd->add_option("--min-branches", min_branches,
                    "ignore matrix cells backed by fewer order-j branches");
    cmd->add_option("--spread-tol", spread_tol, "relative spread allowed by the Toeplitz check");
    cmd->add_option("--format", format, "report format; csv emits the coefficient matrix only")
        ->check(CLI::IsMember({"json", "csv"}));
  }
};

struct StatsAcc {
  geomtree::BranchCounts counts;
  std::int64_t n_trees = 0;
  geomtree::HortonAccumulator horton;
  std::vector<int> scratch;

  void merge(const StatsAcc& other) {
    counts.merge(other.counts);
    n_trees += other.n_trees;
    horton.merge(other.horton);
  }
};

std::string matrix_csv(const geomtree::TokunagaMatrix& tm) {
  int kmax = tm.max_order();
  std::string body = "i\\j";
  for (int j = 2; j <= kmax; ++j) body += "," + std::to_string(j);
  body += "\r\n";
  char cell[64];
  for (int i = 1; i < kmax; ++i) {
    body += std::to_string(i);
    for (int j = 2; j <= kmax; ++j) {
      body += ',';
      if (i >= j) continue;
      auto v = tm.cell(i, j);
      if (!v) continue;
      std::snprintf(cell, sizeof cell, "%.12g", *v);
      body += cell;
    }
    body += "\r\n";
  }
  return body;
}

ordered_json matrix_json(const geomtree::TokunagaMatrix& tm) {
  ordered_json j;
  int kmax = tm.max_order();
  j["max_order"] = kmax;
  j["n_trees"] = tm.n_trees;
  ordered_json branches = ordered_json::array();
  for (int k = 1; k <= kmax; ++k) {
    ordered_json b;
    b["order"] = k;
    b["n_branch"] = tm.branch_count(k);
    branches.push_back(std::move(b));
  }
  j["branches"] = std::move(branches);
  ordered_json cells = ordered_json::array();
  for (int i = 1; i < kmax; ++i) {
    for (int jj = i + 1; jj <= kmax; ++jj) {
      auto v = tm.cell(i, jj);
      if (!v) continue;
      ordered_json cj;
      cj["i"] = i;
      cj["j"] = jj;
      cj["t_hat"] = *v;
      cj["n_side"] = tm.side_count(i, jj);
      cells.push_back(std::move(cj));
    }
  }
  j["cells"] = std::move(cells);
  return j;
}

int run_stats(const StatsFlags& fl) {
  geomtree::TokunagaParams tp = fl.params.build();
  if (fl.lengths && fl.order <= 0)
    throw geomtree::ParameterError("--lengths needs --order: length ratios compare trees of one order");

  geomtree::EnsembleConfig cfg = fl.ensemble.config();
  const bool use_horton = fl.order > 0;
  const bool use_lengths = fl.lengths;
  const int order = fl.order;
  auto gen = [&tp, order, &cfg](geomtree::RngStream& rng) {
    if (order > 0)
      return geomtree::generate_conditioned(tp, order, rng, geomtree::ConditioningMode::kDirect,
                                            cfg.limits);
    return geomtree::generate_recursive(tp, rng, cfg.limits);
  };
  auto consume = [use_horton, use_lengths](geomtree::Tree t, StatsAcc& acc,
                                           geomtree::RngStream& rng) {
    geomtree::accumulate_branch_counts(t, acc.scratch, acc.counts);
    ++acc.n_trees;
    if (use_horton) {
      if (use_lengths) {
        std::vector<double> len = geomtree::decorate_edge_lengths(t, rng);
        acc.horton.add(t, &len);
      } else {
        acc.horton.add(t, nullptr);
      }
    }
  };
  geomtree::EnsembleInfo info;
  StatsAcc acc = geomtree::run_ensemble<StatsAcc>(cfg, gen, consume, &info);

  geomtree::TokunagaMatrix tm = geomtree::tokunaga_from_counts(acc.counts, acc.n_trees);

  if (fl.format == "csv") {
    fl.out.write(matrix_csv(tm));
    return 0;
  }

  ordered_json config = fl.params.to_json();
  {
    ordered_json e = fl.ensemble.to_json();
    for (auto& [k, v] : e.items()) config[k] = v;
  }
  config["order"] = fl.order;
  config["lengths"] = fl.lengths;
  config["min_branches"] = fl.min_branches;
  config["spread_tol"] = fl.spread_tol;

  ordered_json rep = report_for("stats", std::move(config));
  auto& res = rep["results"];
  res["aborted"] = info.aborted;
  res["matrix"] = matrix_json(tm);

  geomtree::GapReport gap = geomtree::tokunaga_gap_spread(tm, fl.spread_tol, fl.min_branches);
  ordered_json gj;
  gj["toeplitz"] = gap.toeplitz;
  gj["max_relative_spread"] = gap.max_relative_spread;
  ordered_json per_gap = ordered_json::array();
  for (const auto& [k, mean] : gap.mean_by_gap) {
    ordered_json row;
    row["gap"] = k;
    row["mean"] = mean;
    row["spread"] = gap.spread_by_gap.at(k);
    per_gap.push_back(std::move(row));
  }
  gj["by_gap"] = std::move(per_gap);
  res["gap_dependence"] = std::move(gj);

  try {
    geomtree::TokunagaFit fit = geomtree::fit_tokunaga(tm, fl.min_branches);
    ordered_json fj;
    fj["a"] = fit.a;
    fj["c"] = fit.c;
    fj["residual"] = fit.residual;
    fj["gaps_used"] = fit.gaps_used;
    fj["r_b_from_c"] = 2.0 * fit.c;
    res["fit"] = std::move(fj);
  } catch (const geomtree::Error&) {
    res["fit"] = nullptr;
  }

  if (use_horton && acc.horton.n_trees > 0) {
    geomtree::HortonReport hr = geomtree::horton_report(acc.horton);
    ordered_json hj;
    hj["order"] = hr.order;
    hj["n_trees"] = hr.n_trees;
    hj["mean_counts"] = hr.mean_counts;
    hj["count_ratios"] = hr.count_ratios;
    hj["r_b_estimate"] = hr.r_b_estimate;
    hj["window"] = ordered_json::array({hr.window_lo, hr.window_hi});
    if (hr.r_r_estimate) {
      hj["mean_lengths"] = hr.mean_lengths;
      hj["length_ratios"] = hr.length_ratios;
      hj["r_r_estimate"] = *hr.r_r_estimate;
      if (hr.d_estimate) hj["d_estimate"] = *hr.d_estimate;
    }
    if (tp.is_critical_family()) {
      hj["r_b_expected"] = 2.0 * tp.critical_c();
      hj["d_expected"] = geomtree::fractal_dimension(tp.critical_c());
    }
    res["horton"] = std::move(hj);
  }

  fl.out.write(rep.dump(2));
  return 0;
}

// --- dynamics -------------------------------------------------------------

struct DynamicsFlags {
  ParamFlags params;
  EnsembleFlags ensemble;
  OutputFlags out;
  int kmax = 40;
  int steps = 5;
  bool empirical = false;

  void attach(CLI::App* cmd) {
    params.attach(cmd);
    ensemble.attach(cmd, 100000);
    out.attach(cmd);
    cmd->add_option("--kmax", kmax, "truncation order of the state vector")
        ->check(CLI::Range(2, 2000));
    cmd->add_option("--steps", steps, "number of evolution steps")->check(CLI::NonNegativeNumber);
    cmd->add_flag("--empirical", empirical,
                  "also sample trees, time-shift them --steps times and compare");
  }
};

int run_dynamics(const DynamicsFlags& fl) {
  geomtree::TokunagaParams tp = fl.params.build();
  geomtree::EvolutionOperator op = geomtree::EvolutionOperator::build(tp, fl.kmax);
  geomtree::StateVector x = geomtree::initial_state(tp.p(), fl.kmax);
  const geomtree::StateVector pi = x;

  ordered_json config = fl.params.to_json();
  config["kmax"] = fl.kmax;
  config["steps"] = fl.steps;
  config["empirical"] = fl.empirical;
  if (fl.empirical) {
    ordered_json e = fl.ensemble.to_json();
    for (auto& [k, v] : e.items()) config[k] = v;
  }

  ordered_json rep = report_for("dynamics", std::move(config));
  auto& res = rep["results"];
  res["initial"] = state_json(pi);
  res["initial_tail_mass"] = geomtree::initial_tail_mass(tp.p(), fl.kmax);

  ordered_json states = ordered_json::array();
  for (int s = 1; s <= fl.steps; ++s) {
    x = geomtree::step(op, x);
    double drift = 0.0;
    for (int k = 1; k <= fl.kmax; ++k) drift += std::fabs(x.x[static_cast<std::size_t>(k)] -
                                                          pi.x[static_cast<std::size_t>(k)]);
    ordered_json entry;
    entry["s"] = s;
    entry["state"] = state_json(x);
    entry["total"] = x.total();
    entry["l1_drift_from_initial"] = drift;
    states.push_back(std::move(entry));
  }
  res["steps"] = std::move(states);

  if (fl.empirical) {
    geomtree::EnsembleConfig cfg = fl.ensemble.config();
    geomtree::EmpiricalState emp = geomtree::empirical_state_vector(
        tp, fl.steps, cfg.n_samples, cfg.seed, cfg.shards, cfg.limits);
    ordered_json ej;
    ej["n_samples"] = emp.n_samples;
    ej["aborted"] = emp.aborted;
    ej["mean"] = state_json(emp.mean);
    std::vector<double> se(emp.se.begin() + std::min<std::size_t>(1, emp.se.size()), emp.se.end());
    ej["se"] = se;
    // z-scores against the truncated linear prediction, where the
    // empirical spread is informative.
    double max_z = 0.0;
    int cmp = std::min(emp.mean.max_order(), fl.kmax);
    std::vector<double> z(static_cast<std::size_t>(std::max(cmp, 0)), 0.0);
    for (int k = 1; k <= cmp; ++k) {
      double sek = emp.se[static_cast<std::size_t>(k)];
      if (sek <= 0.0) continue;
      double pred = x.x[static_cast<std::size_t>(k)];
      double zz = std::fabs(emp.mean.x[static_cast<std::size_t>(k)] - pred) / sek;
      z[static_cast<std::size_t>(k - 1)] = zz;
      max_z = std::max(max_z, zz);
    }
    ej["z_vs_predicted"] = z;
    ej["max_z_vs_predicted"] = max_z;
    res["empirical"] = std::move(ej);
  }

  fl.out.write(rep.dump(2));
  return 0;
}

// --- invariance -----------------------------------------------------------

struct InvarianceFlags {
  ParamFlags params;
  OutputFlags out;
  int kmax = 40;
  double tol = 1e-6;

  void attach(CLI::App* cmd) {
    params.attach(cmd);
    out.attach(cmd);
    cmd->add_option("--kmax", kmax, "truncation order of the state vector")
        ->check(CLI::Range(2, 2000));
    cmd->add_option("--tol", tol, "largest one-step L1 drift that still counts as invariant");
  }
};

int run_invariance(const InvarianceFlags& fl) {
  geomtree::TokunagaParams tp = fl.params.build();
  geomtree::InvarianceResidual res = geomtree::time_invariance_residual(tp, fl.kmax);
  geomtree::InvarianceResidual progeny = geomtree::progeny_mass_gap(tp, fl.kmax);
  const bool pass = res.l1 <= fl.tol;

  ordered_json config = fl.params.to_json();
  config["kmax"] = fl.kmax;
  config["tol"] = fl.tol;
  ordered_json rep = report_for("invariance", std::move(config));
  auto& rj = rep["results"];
  rj["residual_l1"] = res.l1;
  rj["residual_tail_bound"] = res.tail_bound;
  rj["progeny_gap"] = progeny.l1;
  rj["progeny_tail_bound"] = progeny.tail_bound;
  rj["pass"] = pass;
  fl.out.write(rep.dump(2));
  return pass ? 0 : 1;
}

// --- oracle ---------------------------------------------------------------

struct OracleFlags {
  OutputFlags out;
  std::string c;
  std::string p;
  std::vector<std::string> tok;
  std::string tail = "0";
  CLI::Option* c_opt = nullptr;
  CLI::Option* p_opt = nullptr;
  CLI::Option* tok_opt = nullptr;
  CLI::Option* tail_opt = nullptr;
  int max_order = 2;
  int max_side = 8;
  double tol = 1e-9;
  int top = 50;
  std::string measure_newick;
  CLI::Option* measure_opt = nullptr;
  bool prune_check = false;
  bool gw_check = false;

  void attach(CLI::App* cmd) {
    out.attach(cmd);
    c_opt = cmd->add_option("--c", c, "self-similar family ratio, as an exact rational (\"2\", \"3/2\")");
    p_opt = cmd->add_option("--p", p, "progenitor order parameter, exact rational");
    tok_opt = cmd->add_option("--tok", tok, "side-branch coefficients, exact rationals")
                  ->delimiter(',');
    tail_opt = cmd->add_option("--tail", tail, "geometric tail ratio, exact rational");
    tok_opt->needs(p_opt);
    tail_opt->needs(tok_opt);
    c_opt->excludes(p_opt);
    c_opt->excludes(tok_opt);
    c_opt->excludes(tail_opt);
    cmd->add_option("--max-order", max_order, "enumerate shapes up to this order")
        ->check(CLI::Range(1, 4));
    cmd->add_option("--max-side", max_side, "side branches allowed per branch in the enumeration")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--tol", tol, "tolerance: pruned-mass tail truncation and check slack");
    cmd->add_option("--top", top, "shapes listed in the report (heaviest first)")
        ->check(CLI::NonNegativeNumber);
    measure_opt = cmd->add_option("--measure", measure_newick,
                                  "also report the exact mass of this Newick tree");
    cmd->add_flag("--prune-check", prune_check,
                  "check pruned mass / (1 - pruned-to-empty) = mass on enumerated shapes of order <= 2");
    cmd->add_flag("--gw-check", gw_check,
                  "check the mass against the fair-coin product measure (needs --c 2)");
  }

  geomtree::ExactParams build() const {
    if (c_opt->count() > 0) return geomtree::ExactParams::critical(geomtree::parse_rational(c));
    if (tok_opt->count() == 0)
      throw geomtree::ParameterError("give either --c or --p together with --tok");
    std::vector<geomtree::Rational> t;
    t.reserve(tok.size());
    for (const auto& s : tok) t.push_back(geomtree::parse_rational(s));
    return geomtree::ExactParams::explicit_seq(geomtree::parse_rational(p), t,
                                               geomtree::parse_rational(tail));
  }

  ordered_json params_json() const {
    ordered_json j;
    if (c_opt->count() > 0) {
      j["family"] = "critical";
      j["c"] = c;
    } else {
      j["family"] = "explicit";
      j["p"] = p;
      j["tok"] = tok;
      j["tail_ratio"] = tail;
    }
    return j;
  }
};

int run_oracle(const OracleFlags& fl) {
  geomtree::ExactParams ep = fl.build();
  if (fl.gw_check) {
    bool critical_two = fl.c_opt->count() > 0 && geomtree::parse_rational(fl.c) == 2;
    if (!critical_two)
      throw geomtree::ParameterError(
          "--gw-check compares against the fair-coin tree and needs --c 2");
  }

  ordered_json config = fl.params_json();
  config["max_order"] = fl.max_order;
  config["max_side"] = fl.max_side;
  config["tol"] = fl.tol;
  config["top"] = fl.top;
  if (fl.measure_opt->count() > 0) config["measure"] = fl.measure_newick;
  config["prune_check"] = fl.prune_check;
  config["gw_check"] = fl.gw_check;

  ordered_json rep = report_for("oracle", std::move(config));
  auto& res = rep["results"];

  geomtree::Enumeration en = geomtree::enumerate_trees(fl.max_order, fl.max_side, ep);
  {
    ordered_json ej;
    ej["n_shapes"] = en.mass.size();
    ej["total"] = rational_json(en.total);
    ej["missing_mass"] = rational_json(en.missing_mass());
    ordered_json totals = ordered_json::array();
    for (std::size_t k = 1; k < en.order_total.size(); ++k) {
      ordered_json row;
      row["order"] = k;
      row["mass"] = rational_json(en.order_total[k]);
      totals.push_back(std::move(row));
    }
    ej["order_totals"] = std::move(totals);

    std::vector<std::pair<std::string, geomtree::Rational>> ranked(en.mass.begin(), en.mass.end());
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    if (static_cast<int>(ranked.size()) > fl.top)
      ranked.resize(static_cast<std::size_t>(fl.top));
    ordered_json shapes = ordered_json::array();
    for (const auto& [code, mass] : ranked) {
      geomtree::Tree t = geomtree::tree_from_code(code);
      ordered_json row;
      row["code"] = code;
      row["newick"] = geomtree::emit_newick(t);
      row["order"] = geomtree::tree_order(t);
      row["leaves"] = t.leaf_count();
      row["mass"] = rational_json(mass);
      shapes.push_back(std::move(row));
    }
    ej["shapes"] = std::move(shapes);
    res["enumeration"] = std::move(ej);
  }

  geomtree::ExactMeasure mu(ep);

  if (fl.measure_opt->count() > 0) {
    geomtree::Tree t = geomtree::parse_newick(fl.measure_newick).tree;
    ordered_json mj;
    mj["newick"] = geomtree::emit_newick(t);
    mj["order"] = geomtree::tree_order(t);
    mj["mass"] = rational_json(mu.measure(t));
    geomtree::PrunedMass pm = geomtree::exact_pruned_mass(t, ep, fl.tol);
    mj["pruned_mass"] = rational_json(pm.value);
    mj["pruned_mass_tail_bound"] = geomtree::to_double(pm.tail_bound);
    res["measure"] = std::move(mj);
  }

  bool all_pass = true;
  ordered_json checks = ordered_json::object();

  if (fl.prune_check) {
    const geomtree::Rational survive = geomtree::Rational(1) - ep.p();
    geomtree::Rational max_err = 0;
    geomtree::Rational max_allowed = 0;
    int n_checked = 0;
    bool pass = true;
    std::string worst;
    for (const auto& [code, mass] : en.mass) {
      geomtree::Tree t = geomtree::tree_from_code(code);
      if (geomtree::tree_order(t) > 2) continue;
      geomtree::PrunedMass pm = geomtree::exact_pruned_mass(t, ep, fl.tol);
      geomtree::Rational err = abs(pm.value / survive - mass);
      geomtree::Rational allowed = geomtree::Rational(fl.tol) + pm.tail_bound / survive;
      ++n_checked;
      if (err > max_err) {
        max_err = err;
        worst = code;
      }
      if (allowed > max_allowed) max_allowed = allowed;
      if (err > allowed) pass = false;
    }
    ordered_json cj;
    cj["n_shapes"] = n_checked;
    cj["max_error"] = geomtree::to_double(max_err);
    cj["max_allowed"] = geomtree::to_double(max_allowed);
    cj["worst_shape"] = worst;
    cj["pass"] = pass;
    checks["prune_invariance"] = std::move(cj);
    all_pass = all_pass && pass;
  }

  if (fl.gw_check) {
    geomtree::Rational max_diff = 0;
    bool pass = true;
    std::string worst;
    for (const auto& [code, mass] : en.mass) {
      geomtree::Tree t = geomtree::tree_from_code(code);
      geomtree::Rational diff = abs(mass - geomtree::gw_product_measure(t));
      if (diff > max_diff) {
        max_diff = diff;
        worst = code;
      }
      if (geomtree::to_double(diff) > 1e-12) pass = false;
    }
    ordered_json cj;
    cj["n_shapes"] = en.mass.size();
    cj["max_difference"] = geomtree::to_double(max_diff);
    cj["worst_shape"] = worst;
    cj["pass"] = pass;
    checks["gw_product"] = std::move(cj);
    all_pass = all_pass && pass;
  }

  res["checks"] = std::move(checks);
  res["pass"] = all_pass;
  fl.out.write(rep.dump(2));
  return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"geometric random trees: sampling, branch statistics, pruning and"
               " time-shift dynamics, and exact rational cross-checks"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  GenerateFlags gen_flags;
  CLI::App* gen_cmd = app.add_subcommand("generate", "sample random trees as Newick strings");
  gen_flags.attach(gen_cmd);

  PruneFlags prune_flags;
  CLI::App* prune_cmd = app.add_subcommand("prune", "apply leaf pruning to a Newick tree");
  prune_flags.attach(prune_cmd);

  StatsFlags stats_flags;
  CLI::App* stats_cmd =
      app.add_subcommand("stats", "estimate the side-branch coefficient matrix and branch-count laws");
  stats_flags.attach(stats_cmd);

  DynamicsFlags dyn_flags;
  CLI::App* dyn_cmd =
      app.add_subcommand("dynamics", "evolve the expected order-population vector step by step");
  dyn_flags.attach(dyn_cmd);

  InvarianceFlags inv_flags;
  CLI::App* inv_cmd = app.add_subcommand(
      "invariance", "check one-step invariance of the order distribution (exit 1 when it drifts)");
  inv_flags.attach(inv_cmd);

  OracleFlags oracle_flags;
  CLI::App* oracle_cmd = app.add_subcommand(
      "oracle", "exact rational shape probabilities, enumeration and consistency checks");
  oracle_flags.attach(oracle_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen_cmd->parsed()) return run_generate(gen_flags);
    if (prune_cmd->parsed()) return run_prune(prune_flags);
    if (stats_cmd->parsed()) return run_stats(stats_flags);
    if (dyn_cmd->parsed()) return run_dynamics(dyn_flags);
    if (inv_cmd->parsed()) return run_invariance(inv_flags);
    if (oracle_cmd->parsed()) return run_oracle(oracle_flags);
  } catch (const geomtree::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
