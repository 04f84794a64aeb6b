#pragma once

#include <cstdint>
#include <exception>
#include <thread>
#include <vector>

#include "geomtree/error.hpp"
#include "geomtree/rng.hpp"
#include "geomtree/sampler.hpp"

namespace geomtree {

// Ensemble runs are sharded: shard w draws from substream(seed, w) and
// accumulates locally, and shard results merge in index order.  The
// outcome therefore depends on (seed, shards) only, never on scheduling,
// and shards may run on threads or sequentially with identical results.
struct EnsembleConfig {
  std::int64_t n_samples = 0;
  std::uint64_t seed = 0;
  int shards = 1;
  GenerationLimits limits;
};

struct EnsembleInfo {
  std::int64_t aborted = 0;  // budget breaches that were redrawn
};

inline constexpr int kMaxConsecutiveAborts = 100000;

// Draws one sample with redraw-on-abort semantics.
template <class Gen>
auto sample_with_retry(Gen&& gen, RngStream& rng, std::int64_t& aborted)
    -> decltype(gen(rng)) {
  for (int attempt = 0; attempt < kMaxConsecutiveAborts; ++attempt) {
    try {
      return gen(rng);
    } catch (const GenerationAborted&) {
      ++aborted;
    }
  }
  throw GenerationAborted("budget too small: every redraw aborted");
}

// Acc must be default-constructible and provide merge(const Acc&).
// consume(tree-like sample, acc, rng) folds one sample into the shard
// accumulator.
template <class Acc, class Gen, class Consume>
Acc run_ensemble(const EnsembleConfig& cfg, Gen gen, Consume consume, EnsembleInfo* info = nullptr) {
  const int shards = cfg.shards > 0 ? cfg.shards : 1;
  const RngStream base(cfg.seed);
  std::vector<Acc> acc(static_cast<std::size_t>(shards));
  std::vector<std::int64_t> aborted(static_cast<std::size_t>(shards), 0);

  auto run_shard = [&](int w) {
    RngStream rng = base.substream(static_cast<std::uint64_t>(w));
    const std::int64_t lo = cfg.n_samples * w / shards;
    const std::int64_t hi = cfg.n_samples * (w + 1) / shards;
    auto& a = acc[static_cast<std::size_t>(w)];
    auto& ab = aborted[static_cast<std::size_t>(w)];
    for (std::int64_t i = lo; i < hi; ++i) {
      consume(sample_with_retry(gen, rng, ab), a, rng);
    }
  };

  if (shards == 1) {
    run_shard(0);
  } else {
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(shards));
    {
      std::vector<std::jthread> threads;
      threads.reserve(static_cast<std::size_t>(shards));
      for (int w = 0; w < shards; ++w) {
        threads.emplace_back([&, w] {
          try {
            run_shard(w);
          } catch (...) {
            errors[static_cast<std::size_t>(w)] = std::current_exception();
          }
        });
      }
    }
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  Acc total;
  std::int64_t total_aborted = 0;
  for (int w = 0; w < shards; ++w) {
    total.merge(acc[static_cast<std::size_t>(w)]);
    total_aborted += aborted[static_cast<std::size_t>(w)];
  }
  if (info) info->aborted = total_aborted;
  return total;
}

}  // namespace geomtree
