#pragma once

#include "satentropy/cnf.hpp"

#include <gmpxx.h>

#include <chrono>
#include <cstdint>
#include <list>
#include <optional>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

namespace satentropy {

/// Exact number of satisfying total assignments, 0 <= value <= 2^num_vars.
using ModelCount = mpz_class;

struct CounterBudget {
  std::optional<std::chrono::milliseconds> time_limit;
  std::optional<std::uint64_t> max_decisions;
  /// Cache entries beyond this are discarded least-recently-used first.
  std::size_t max_cache_entries = std::size_t{1} << 20U;
};

class BudgetExhausted : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct CounterStats {
  std::uint64_t calls = 0;
  std::uint64_t decisions = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t cache_misses = 0;
  std::uint64_t cache_evictions = 0;
};

/// Exhaustive DPLL counter with unit propagation, connected-component
/// decomposition and a component cache.
///
/// The cache is keyed by the residual clause set of a component, which fully
/// determines its count, so entries stay valid across calls on different
/// formulas. A counter is single-threaded; use one instance per thread.
class ModelCounter {
public:
  explicit ModelCounter(CounterBudget budget = {});

  /// #SAT(formula ∧ assumptions). Throws BudgetExhausted, never returns a
  /// partial count.
  ModelCount count(const CnfFormula& formula, std::span<const Lit> assumptions = {});

  [[nodiscard]] const CounterStats& stats() const { return stats_; }
  [[nodiscard]] std::size_t cache_size() const { return cache_.size(); }
  void clear_cache();

private:
  struct KeyHash {
    std::size_t operator()(const std::vector<std::uint32_t>& key) const noexcept;
  };
  using CacheList = std::list<std::pair<std::vector<std::uint32_t>, ModelCount>>;

  friend class CountSearch;

  const ModelCount* cache_find(const std::vector<std::uint32_t>& key);
  void cache_store(std::vector<std::uint32_t> key, const ModelCount& value);

  CounterBudget budget_;
  CounterStats stats_;
  CacheList lru_;
  std::unordered_map<std::vector<std::uint32_t>, CacheList::iterator, KeyHash> cache_;
};

ModelCount count_models(const CnfFormula& formula, const CounterBudget& budget = {});

/// #SAT(formula ∧ l) without modifying the formula.
ModelCount count_conditioned(const CnfFormula& formula, Lit l, const CounterBudget& budget = {});

/// Enumeration over all 2^n assignments. Throws std::invalid_argument for n > 30.
ModelCount count_models_bruteforce(const CnfFormula& formula);

}  // namespace satentropy
