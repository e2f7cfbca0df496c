#include "satentropy/counter.hpp"

#include <algorithm>
#include <numeric>

namespace satentropy {

namespace {
constexpr std::uint8_t kFalse = 0;
constexpr std::uint8_t kTrue = 1;
constexpr std::uint8_t kUnassigned = 2;
}  // namespace

// One counting run over a fixed formula. Literals are handled as raw codes
// (2 * var + negative) throughout.
class CountSearch {
public:
  CountSearch(ModelCounter& owner, const CnfFormula& formula)
      : owner_(owner),
        num_vars_(formula.num_vars()),
        occ_(2 * std::size_t{formula.num_vars()}),
        value_(formula.num_vars(), kUnassigned),
        stamp_(formula.num_vars(), 0),
        score_(formula.num_vars(), 0),
        parent_(formula.num_vars()) {
    std::iota(parent_.begin(), parent_.end(), 0U);
    for (const auto& c : formula.clauses()) {
      if (c.tautology())
        continue;
      if (c.empty())
        has_empty_clause_ = true;
      std::vector<std::uint32_t> lits;
      lits.reserve(c.size());
      for (Lit l : c)
        lits.push_back(l.code());
      const auto id = static_cast<std::uint32_t>(clauses_.size());
      for (auto code : lits)
        occ_[code].push_back(id);
      clauses_.push_back(std::move(lits));
    }
    if (owner_.budget_.time_limit)
      deadline_ = std::chrono::steady_clock::now() + *owner_.budget_.time_limit;
  }

  ModelCount run(std::span<const Lit> assumptions) {
    if (has_empty_clause_)
      return 0;
    for (Lit l : assumptions) {
      if (l.var().index >= num_vars_)
        throw std::out_of_range("assumption literal " + std::to_string(l.dimacs()) + " exceeds declared " +
                                std::to_string(num_vars_) + " vars");
      if (!assign_checked(l.code()))
        return 0;
    }
    for (const auto& c : clauses_) {
      if (c.size() == 1 && !assign_checked(c[0]))
        return 0;
    }
    if (!propagate(0))
      return 0;

    std::vector<std::uint32_t> residual;
    for (std::uint32_t id = 0; id < clauses_.size(); ++id) {
      if (!satisfied(id))
        residual.push_back(id);
    }
    const std::uint32_t in_residual = mark_vars(residual, nullptr);
    std::uint32_t unassigned = 0;
    for (auto v : value_)
      unassigned += v == kUnassigned ? 1U : 0U;

    ModelCount result = 1;
    mpz_mul_2exp(result.get_mpz_t(), result.get_mpz_t(), unassigned - in_residual);
    for (const auto& comp : split(residual)) {
      ModelCount sub = count_component(comp);
      if (sub == 0)
        return 0;
      result *= sub;
    }
    return result;
  }

private:
  [[nodiscard]] bool lit_true(std::uint32_t code) const {
    auto v = value_[code >> 1U];
    return v != kUnassigned && v == ((code & 1U) != 0 ? kFalse : kTrue);
  }
  [[nodiscard]] bool lit_unassigned(std::uint32_t code) const { return value_[code >> 1U] == kUnassigned; }

  void assign(std::uint32_t code) {
    value_[code >> 1U] = (code & 1U) != 0 ? kFalse : kTrue;
    trail_.push_back(code);
  }

  // false when the literal is already false
  bool assign_checked(std::uint32_t code) {
    if (lit_true(code))
      return true;
    if (!lit_unassigned(code))
      return false;
    assign(code);
    return true;
  }

  void undo(std::size_t mark) {
    while (trail_.size() > mark) {
      value_[trail_.back() >> 1U] = kUnassigned;
      trail_.pop_back();
    }
  }

  [[nodiscard]] bool satisfied(std::uint32_t id) const {
    return std::any_of(clauses_[id].begin(), clauses_[id].end(), [&](auto code) { return lit_true(code); });
  }

  bool propagate(std::size_t head) {
    while (head < trail_.size()) {
      const std::uint32_t falsified = trail_[head++] ^ 1U;
      for (auto id : occ_[falsified]) {
        std::uint32_t free_count = 0;
        std::uint32_t last_free = 0;
        bool sat = false;
        for (auto code : clauses_[id]) {
          if (lit_true(code)) {
            sat = true;
            break;
          }
          if (lit_unassigned(code)) {
            ++free_count;
            last_free = code;
          }
        }
        if (sat)
          continue;
        if (free_count == 0)
          return false;
        if (free_count == 1)
          assign(last_free);
      }
    }
    return true;
  }

  // Counts distinct unassigned variables occurring in `ids`; optionally
  // collects them.
  std::uint32_t mark_vars(const std::vector<std::uint32_t>& ids, std::vector<std::uint32_t>* out) {
    ++generation_;
    std::uint32_t n = 0;
    for (auto id : ids) {
      for (auto code : clauses_[id]) {
        const auto v = code >> 1U;
        if (value_[v] == kUnassigned && stamp_[v] != generation_) {
          stamp_[v] = generation_;
          ++n;
          if (out != nullptr)
            out->push_back(v);
        }
      }
    }
    return n;
  }

  std::uint32_t find(std::uint32_t v) {
    while (parent_[v] != v) {
      parent_[v] = parent_[parent_[v]];
      v = parent_[v];
    }
    return v;
  }

  std::vector<std::vector<std::uint32_t>> split(const std::vector<std::uint32_t>& ids) {
    std::vector<std::uint32_t> touched;
    for (auto id : ids) {
      std::int64_t first = -1;
      for (auto code : clauses_[id]) {
        const auto v = code >> 1U;
        if (value_[v] != kUnassigned)
          continue;
        touched.push_back(v);
        if (first < 0) {
          first = v;
        } else {
          const auto a = find(static_cast<std::uint32_t>(first));
          const auto b = find(v);
          if (a != b)
            parent_[std::max(a, b)] = std::min(a, b);
        }
      }
    }
    std::vector<std::vector<std::uint32_t>> comps;
    std::vector<std::pair<std::uint32_t, std::size_t>> root_slot;
    for (auto id : ids) {
      std::uint32_t root = 0;
      for (auto code : clauses_[id]) {
        if (lit_unassigned(code)) {
          root = find(code >> 1U);
          break;
        }
      }
      auto it = std::find_if(root_slot.begin(), root_slot.end(), [&](const auto& p) { return p.first == root; });
      if (it == root_slot.end()) {
        root_slot.emplace_back(root, comps.size());
        comps.emplace_back();
        comps.back().push_back(id);
      } else {
        comps[it->second].push_back(id);
      }
    }
    for (auto v : touched)
      parent_[v] = v;
    return comps;
  }

  std::vector<std::uint32_t> make_key(const std::vector<std::uint32_t>& ids) const {
    std::vector<std::vector<std::uint32_t>> residual;
    residual.reserve(ids.size());
    for (auto id : ids) {
      std::vector<std::uint32_t> lits;
      for (auto code : clauses_[id]) {
        if (lit_unassigned(code))
          lits.push_back(code + 1);
      }
      std::sort(lits.begin(), lits.end());
      residual.push_back(std::move(lits));
    }
    std::sort(residual.begin(), residual.end());
    std::vector<std::uint32_t> key;
    for (const auto& c : residual) {
      key.insert(key.end(), c.begin(), c.end());
      key.push_back(0);
    }
    return key;
  }

  void check_budget() {
    auto& stats = owner_.stats_;
    if (owner_.budget_.max_decisions && stats.decisions > *owner_.budget_.max_decisions)
      throw BudgetExhausted("model counting exceeded decision budget of " +
                            std::to_string(*owner_.budget_.max_decisions));
    if (deadline_ && (stats.decisions & 0xFFU) == 0 && std::chrono::steady_clock::now() > *deadline_)
      throw BudgetExhausted("model counting exceeded time budget");
  }

  std::uint32_t pick_branch_var(const std::vector<std::uint32_t>& ids, const std::vector<std::uint32_t>& vars) {
    for (auto id : ids) {
      for (auto code : clauses_[id]) {
        if (lit_unassigned(code))
          ++score_[code >> 1U];
      }
    }
    std::uint32_t best = vars.front();
    for (auto v : vars) {
      if (score_[v] > score_[best] || (score_[v] == score_[best] && v < best))
        best = v;
    }
    for (auto v : vars)
      score_[v] = 0;
    return best;
  }

  // Precondition: `ids` is a connected set of unsatisfied clauses, each with
  // at least two unassigned literals.
  ModelCount count_component(const std::vector<std::uint32_t>& ids) {
    auto key = make_key(ids);
    if (const ModelCount* hit = owner_.cache_find(key))
      return *hit;

    std::vector<std::uint32_t> vars;
    mark_vars(ids, &vars);
    const std::uint32_t branch_var = pick_branch_var(ids, vars);

    ModelCount total = 0;
    for (std::uint32_t sign = 0; sign < 2; ++sign) {
      ++owner_.stats_.decisions;
      check_budget();
      const std::size_t mark = trail_.size();
      assign(2 * branch_var + sign);
      if (propagate(mark)) {
        std::vector<std::uint32_t> residual;
        for (auto id : ids) {
          if (!satisfied(id))
            residual.push_back(id);
        }
        std::uint32_t still_free = 0;
        for (auto v : vars)
          still_free += value_[v] == kUnassigned ? 1U : 0U;
        const std::uint32_t in_residual = mark_vars(residual, nullptr);

        ModelCount branch = 1;
        mpz_mul_2exp(branch.get_mpz_t(), branch.get_mpz_t(), still_free - in_residual);
        for (const auto& comp : split(residual)) {
          ModelCount sub = count_component(comp);
          if (sub == 0) {
            branch = 0;
            break;
          }
          branch *= sub;
        }
        total += branch;
      }
      undo(mark);
    }
    owner_.cache_store(std::move(key), total);
    return total;
  }

  ModelCounter& owner_;
  std::uint32_t num_vars_;
  bool has_empty_clause_ = false;
  std::vector<std::vector<std::uint32_t>> clauses_;
  std::vector<std::vector<std::uint32_t>> occ_;
  std::vector<std::uint8_t> value_;
  std::vector<std::uint32_t> trail_;
  std::vector<std::uint32_t> stamp_;
  std::uint32_t generation_ = 0;
  std::vector<std::uint32_t> score_;
  std::vector<std::uint32_t> parent_;
  std::optional<std::chrono::steady_clock::time_point> deadline_;
};

std::size_t ModelCounter::KeyHash::operator()(const std::vector<std::uint32_t>& key) const noexcept {
  std::uint64_t h = 1469598103934665603ULL;
  for (auto x : key) {
    h ^= x;
    h *= 1099511628211ULL;
  }
  return static_cast<std::size_t>(h);
}

ModelCounter::ModelCounter(CounterBudget budget) : budget_(budget) {}

void ModelCounter::clear_cache() {
  cache_.clear();
  lru_.clear();
}

const ModelCount* ModelCounter::cache_find(const std::vector<std::uint32_t>& key) {
  auto it = cache_.find(key);
  if (it == cache_.end()) {
    ++stats_.cache_misses;
    return nullptr;
  }
  ++stats_.cache_hits;
  lru_.splice(lru_.begin(), lru_, it->second);
  return &it->second->second;
}

void ModelCounter::cache_store(std::vector<std::uint32_t> key, const ModelCount& value) {
  if (budget_.max_cache_entries == 0)
    return;
  if (cache_.find(key) != cache_.end())
    return;
  while (cache_.size() >= budget_.max_cache_entries) {
    cache_.erase(lru_.back().first);
    lru_.pop_back();
    ++stats_.cache_evictions;
  }
  lru_.emplace_front(std::move(key), value);
  cache_.emplace(lru_.front().first, lru_.begin());
}

ModelCount ModelCounter::count(const CnfFormula& formula, std::span<const Lit> assumptions) {
  ++stats_.calls;
  CountSearch search(*this, formula);
  return search.run(assumptions);
}

ModelCount count_models(const CnfFormula& formula, const CounterBudget& budget) {
  ModelCounter counter(budget);
  return counter.count(formula);
}

ModelCount count_conditioned(const CnfFormula& formula, Lit l, const CounterBudget& budget) {
  ModelCounter counter(budget);
  const Lit assumption[] = {l};
  return counter.count(formula, assumption);
}

ModelCount count_models_bruteforce(const CnfFormula& formula) {
  const std::uint32_t n = formula.num_vars();
  if (n > 30)
    throw std::invalid_argument("brute-force counting supports at most 30 vars, got " + std::to_string(n));

  // Clause c is satisfied by bit-vector a iff (a & pos) | (~a & neg) != 0,
  // the same test evaluate() performs literal by literal.
  struct Masks {
    std::uint64_t pos = 0;
    std::uint64_t neg = 0;
  };
  std::vector<Masks> masks;
  for (const auto& c : formula.clauses()) {
    Masks m;
    for (Lit l : c)
      (l.negative() ? m.neg : m.pos) |= std::uint64_t{1} << l.var().index;
    masks.push_back(m);
  }
  std::uint64_t count = 0;
  const std::uint64_t limit = std::uint64_t{1} << n;
  for (std::uint64_t a = 0; a < limit; ++a) {
    const bool ok = std::all_of(masks.begin(), masks.end(),
                                [a](const Masks& m) { return ((a & m.pos) | (~a & m.neg)) != 0; });
    count += ok ? 1U : 0U;
  }
  ModelCount out;
  mpz_import(out.get_mpz_t(), 1, 1, sizeof(count), 0, 0, &count);
  return out;
}

}  // namespace satentropy
