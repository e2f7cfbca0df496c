#include "satentropy/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

namespace satentropy {

void SolverConfig::validate() const {
  if (!(decay > 0.0 && decay < 1.0))
    throw std::invalid_argument("decay must lie strictly between 0 and 1");
  if (reduce_interval == 0)
    throw std::invalid_argument("reduce_interval must be at least 1");
  if (const auto* l = std::get_if<LubyRestart>(&restart); l != nullptr && l->base_interval == 0)
    throw std::invalid_argument("luby base interval must be at least 1");
  if (const auto* g = std::get_if<GlucoseRestart>(&restart);
      g != nullptr && (g->window == 0 || !(g->margin > 0.0)))
    throw std::invalid_argument("glucose restart needs window >= 1 and margin > 0");
  if (const auto* k = std::get_if<KeepLbdCutAtMost>(&deletion); k != nullptr && k->cut == 0)
    throw std::invalid_argument("LBD cut must be at least 1");
  if (const auto* k = std::get_if<KeepSizeAtMost>(&deletion); k != nullptr && k->size == 0)
    throw std::invalid_argument("size cut must be at least 1");
}

namespace {

std::vector<std::string> split_colon(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string part; std::getline(ss, part, ':');)
    parts.push_back(part);
  return parts;
}

std::uint32_t to_u32(const std::string& s, const std::string& what) {
  std::size_t pos = 0;
  unsigned long v = 0;
  try {
    v = std::stoul(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size() || s.empty() || v > std::numeric_limits<std::uint32_t>::max())
    throw std::invalid_argument("invalid " + what + " '" + s + "'");
  return static_cast<std::uint32_t>(v);
}

double to_double(const std::string& s, const std::string& what) {
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size() || s.empty())
    throw std::invalid_argument("invalid " + what + " '" + s + "'");
  return v;
}

std::string format_real(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

RestartPolicy parse_restart(const std::string& text) {
  auto parts = split_colon(text);
  if (!parts.empty() && parts[0] == "luby" && parts.size() <= 2) {
    LubyRestart r;
    if (parts.size() == 2)
      r.base_interval = to_u32(parts[1], "luby base interval");
    return r;
  }
  if (!parts.empty() && parts[0] == "glucose" && parts.size() <= 3) {
    GlucoseRestart r;
    if (parts.size() >= 2)
      r.window = to_u32(parts[1], "glucose window");
    if (parts.size() == 3)
      r.margin = to_double(parts[2], "glucose margin");
    return r;
  }
  throw std::invalid_argument("restart policy must be luby:<base> or glucose:<window>:<margin>, got '" + text + "'");
}

DeletionCriterion parse_deletion(const std::string& text) {
  auto parts = split_colon(text);
  if (parts.size() == 2 && parts[0] == "lbd")
    return KeepLbdCutAtMost{to_u32(parts[1], "LBD cut")};
  if (parts.size() == 2 && parts[0] == "size")
    return KeepSizeAtMost{to_u32(parts[1], "size cut")};
  throw std::invalid_argument("deletion criterion must be lbd:<cut> or size:<size>, got '" + text + "'");
}

std::string to_string(const RestartPolicy& policy) {
  if (const auto* l = std::get_if<LubyRestart>(&policy))
    return "luby:" + std::to_string(l->base_interval);
  const auto& g = std::get<GlucoseRestart>(policy);
  return "glucose:" + std::to_string(g.window) + ":" + format_real(g.margin);
}

std::string to_string(const DeletionCriterion& criterion) {
  if (const auto* k = std::get_if<KeepLbdCutAtMost>(&criterion))
    return "lbd:" + std::to_string(k->cut);
  return "size:" + std::to_string(std::get<KeepSizeAtMost>(criterion).size);
}

void record_lbd(LearnedClauseMeta& meta, std::uint32_t lbd) {
  meta.lbd_current = lbd;
  meta.lbd_cut = meta.lbd_cut == 0 ? lbd : std::min(meta.lbd_cut, lbd);
}

std::uint32_t compute_lbd(std::span<const Lit> clause, std::span<const int> level_of) {
  std::vector<int> levels;
  levels.reserve(clause.size());
  for (Lit l : clause) {
    if (l.var().index >= level_of.size() || level_of[l.var().index] < 0)
      throw std::invalid_argument("compute_lbd: literal " + std::to_string(l.dimacs()) + " is unassigned");
    levels.push_back(level_of[l.var().index]);
  }
  std::sort(levels.begin(), levels.end());
  return static_cast<std::uint32_t>(std::unique(levels.begin(), levels.end()) - levels.begin());
}

std::uint64_t luby(std::uint64_t i) {
  if (i == 0)
    throw std::invalid_argument("luby sequence is 1-indexed");
  // Find the finite subsequence containing index x (0-based), then descend.
  std::uint64_t x = i - 1;
  std::uint64_t size = 1;
  int seq = 0;
  while (size < x + 1) {
    ++seq;
    size = 2 * size + 1;
  }
  while (size - 1 != x) {
    size = (size - 1) >> 1U;
    --seq;
    x = x % size;
  }
  return std::uint64_t{1} << seq;
}

bool glucose_restart_due(std::span<const std::uint32_t> recent, std::size_t window, double global_mean,
                         double margin) {
  if (window == 0 || recent.size() < window)
    return false;
  double sum = 0;
  for (auto v : recent.last(window))
    sum += v;
  return sum / static_cast<double>(window) * margin > global_mean;
}

ReducePartition reduce_database(std::span<const LearnedClauseMeta> learned, const DeletionCriterion& criterion) {
  auto protected_by_criterion = [&](const LearnedClauseMeta& m) {
    if (const auto* k = std::get_if<KeepLbdCutAtMost>(&criterion))
      return m.lbd_cut <= k->cut;
    return m.size <= std::get<KeepSizeAtMost>(criterion).size;
  };
  ReducePartition out;
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < learned.size(); ++i) {
    if (learned[i].locked || protected_by_criterion(learned[i]))
      out.kept.push_back(i);
    else
      candidates.push_back(i);
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [&](std::size_t a, std::size_t b) { return learned[a].activity < learned[b].activity; });
  const std::size_t drop = candidates.size() / 2;
  out.deleted.assign(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(drop));
  out.kept.insert(out.kept.end(), candidates.begin() + static_cast<std::ptrdiff_t>(drop), candidates.end());
  std::sort(out.kept.begin(), out.kept.end());
  std::sort(out.deleted.begin(), out.deleted.end());
  return out;
}

VsidsActivity::VsidsActivity(std::uint32_t num_vars, double decay) : activity_(num_vars, 0.0), decay_(decay) {
  if (!(decay > 0.0 && decay < 1.0))
    throw std::invalid_argument("decay must lie strictly between 0 and 1");
}

void VsidsActivity::bump(Var v) {
  if ((activity_[v.index] += increment_) > 1e100) {
    for (auto& a : activity_)
      a *= 1e-100;
    increment_ *= 1e-100;
  }
}

void VsidsActivity::decay() { increment_ /= decay_; }

namespace {

constexpr std::uint32_t kNoReason = std::numeric_limits<std::uint32_t>::max();
constexpr std::uint32_t kNoLit = std::numeric_limits<std::uint32_t>::max();
constexpr std::uint8_t kFalse = 0;
constexpr std::uint8_t kTrue = 1;
constexpr std::uint8_t kUndef = 2;
constexpr double kClauseDecay = 0.999;

// Indexed binary max-heap over variables ordered by VSIDS activity.
class VarOrder {
public:
  explicit VarOrder(const VsidsActivity& act) : act_(act), pos_(act.num_vars(), -1) {}

  [[nodiscard]] bool empty() const { return heap_.empty(); }
  [[nodiscard]] bool contains(std::uint32_t v) const { return pos_[v] >= 0; }

  void insert(std::uint32_t v) {
    if (contains(v))
      return;
    pos_[v] = static_cast<int>(heap_.size());
    heap_.push_back(v);
    sift_up(heap_.size() - 1);
  }

  void increased(std::uint32_t v) {
    if (contains(v))
      sift_up(static_cast<std::size_t>(pos_[v]));
  }

  std::uint32_t pop() {
    const std::uint32_t top = heap_.front();
    heap_.front() = heap_.back();
    pos_[heap_.front()] = 0;
    heap_.pop_back();
    pos_[top] = -1;
    if (!heap_.empty())
      sift_down(0);
    return top;
  }

private:
  [[nodiscard]] bool before(std::uint32_t a, std::uint32_t b) const {
    const double x = act_.activity(Var{a});
    const double y = act_.activity(Var{b});
    return x > y || (x == y && a < b);
  }

  void sift_up(std::size_t i) {
    const std::uint32_t v = heap_[i];
    while (i > 0) {
      const std::size_t parent = (i - 1) / 2;
      if (!before(v, heap_[parent]))
        break;
      heap_[i] = heap_[parent];
      pos_[heap_[i]] = static_cast<int>(i);
      i = parent;
    }
    heap_[i] = v;
    pos_[v] = static_cast<int>(i);
  }

  void sift_down(std::size_t i) {
    const std::uint32_t v = heap_[i];
    for (;;) {
      std::size_t child = 2 * i + 1;
      if (child >= heap_.size())
        break;
      if (child + 1 < heap_.size() && before(heap_[child + 1], heap_[child]))
        ++child;
      if (!before(heap_[child], v))
        break;
      heap_[i] = heap_[child];
      pos_[heap_[i]] = static_cast<int>(i);
      i = child;
    }
    heap_[i] = v;
    pos_[v] = static_cast<int>(i);
  }

  const VsidsActivity& act_;
  std::vector<std::uint32_t> heap_;
  std::vector<int> pos_;
};

struct ClauseRec {
  std::vector<std::uint32_t> lits;
  bool learned = false;
  bool removed = false;
  LearnedClauseMeta meta;
};

struct Watcher {
  std::uint32_t cref;
  std::uint32_t blocker;
};

class Cdcl {
public:
  Cdcl(const CnfFormula& formula, const SolverConfig& config)
      : formula_(formula),
        config_(config),
        n_(formula.num_vars()),
        assigns_(n_, kUndef),
        level_(n_, -1),
        reason_(n_, kNoReason),
        saved_negative_(n_, 1),
        seen_(n_, 0),
        watches_(2 * std::size_t{n_}),
        vsids_(n_, config.decay),
        order_(vsids_),
        level_stamp_(n_ + 1, 0) {
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> jitter(0.0, 1e-5);
    for (std::uint32_t v = 0; v < n_; ++v)
      vsids_.set_initial(Var{v}, jitter(rng));
    for (std::uint32_t v = 0; v < n_; ++v)
      order_.insert(v);
  }

  SolveStats run() {
    SolveStats stats = search();
    std::uint64_t alive = 0;
    for (const auto& c : db_)
      alive += (c.learned && !c.removed) ? 1U : 0U;
    stats.learned_kept = alive;
    return stats;
  }

private:
  [[nodiscard]] std::uint8_t value(std::uint32_t lit) const {
    const std::uint8_t a = assigns_[lit >> 1U];
    return a == kUndef ? kUndef : static_cast<std::uint8_t>(a ^ (lit & 1U));
  }
  [[nodiscard]] int decision_level() const { return static_cast<int>(trail_lim_.size()); }

  void enqueue(std::uint32_t lit, std::uint32_t reason) {
    const std::uint32_t v = lit >> 1U;
    assigns_[v] = (lit & 1U) != 0 ? kFalse : kTrue;
    level_[v] = decision_level();
    reason_[v] = reason;
    trail_.push_back(lit);
  }

  void attach(std::uint32_t cref) {
    const auto& c = db_[cref].lits;
    watches_[c[0]].push_back({cref, c[1]});
    watches_[c[1]].push_back({cref, c[0]});
  }

  std::uint32_t propagate() {
    std::uint32_t conflict = kNoReason;
    while (qhead_ < trail_.size() && conflict == kNoReason) {
      const std::uint32_t false_lit = trail_[qhead_++] ^ 1U;
      ++stats_.propagations;
      auto& ws = watches_[false_lit];
      std::size_t i = 0;
      std::size_t j = 0;
      while (i < ws.size()) {
        const Watcher w = ws[i];
        if (db_[w.cref].removed) {
          ++i;
          continue;
        }
        if (value(w.blocker) == kTrue) {
          ws[j++] = ws[i++];
          continue;
        }
        auto& c = db_[w.cref].lits;
        if (c[0] == false_lit)
          std::swap(c[0], c[1]);
        const std::uint32_t first = c[0];
        if (first != w.blocker && value(first) == kTrue) {
          ws[j++] = {w.cref, first};
          ++i;
          continue;
        }
        bool moved = false;
        for (std::size_t k = 2; k < c.size(); ++k) {
          if (value(c[k]) != kFalse) {
            std::swap(c[1], c[k]);
            watches_[c[1]].push_back({w.cref, first});
            moved = true;
            break;
          }
        }
        if (moved) {
          ++i;
          continue;
        }
        ws[j++] = {w.cref, first};
        ++i;
        if (value(first) == kFalse) {
          conflict = w.cref;
          qhead_ = trail_.size();
          while (i < ws.size())
            ws[j++] = ws[i++];
        } else {
          enqueue(first, w.cref);
        }
      }
      ws.resize(j);
    }
    return conflict;
  }

  std::uint32_t lbd_of(const std::vector<std::uint32_t>& lits) {
    ++lbd_generation_;
    std::uint32_t n = 0;
    for (auto l : lits) {
      const auto lvl = static_cast<std::size_t>(level_[l >> 1U]);
      if (level_stamp_[lvl] != lbd_generation_) {
        level_stamp_[lvl] = lbd_generation_;
        ++n;
      }
    }
    return n;
  }

  void bump_clause(ClauseRec& c) {
    if ((c.meta.activity += clause_inc_) > 1e20) {
      for (auto& other : db_) {
        if (other.learned)
          other.meta.activity *= 1e-20;
      }
      clause_inc_ *= 1e-20;
    }
  }

  void clause_used_in_analysis(std::uint32_t cref) {
    auto& c = db_[cref];
    if (!c.learned)
      return;
    bump_clause(c);
    if (config_.recompute_lbd)
      record_lbd(c.meta, lbd_of(c.lits));
  }

  void bump_var(std::uint32_t v) {
    vsids_.bump(Var{v});
    order_.increased(v);
  }

  // First-UIP learning; returns the backjump level. learnt[0] is asserting.
  int analyze(std::uint32_t conflict, std::vector<std::uint32_t>& learnt) {
    learnt.clear();
    learnt.push_back(kNoLit);
    int path = 0;
    std::uint32_t p = kNoLit;
    std::size_t index = trail_.size();
    do {
      clause_used_in_analysis(conflict);
      const auto& c = db_[conflict].lits;
      for (std::size_t k = (p == kNoLit ? 0 : 1); k < c.size(); ++k) {
        const std::uint32_t q = c[k];
        const std::uint32_t v = q >> 1U;
        if (seen_[v] == 0 && level_[v] > 0) {
          bump_var(v);
          seen_[v] = 1;
          if (level_[v] >= decision_level())
            ++path;
          else
            learnt.push_back(q);
        }
      }
      while (seen_[trail_[--index] >> 1U] == 0) {
      }
      p = trail_[index];
      conflict = reason_[p >> 1U];
      seen_[p >> 1U] = 0;
      --path;
    } while (path > 0);
    learnt[0] = p ^ 1U;

    // Drop literals implied by the rest of the clause through a single reason.
    to_clear_.assign(learnt.begin(), learnt.end());
    std::size_t keep = 1;
    for (std::size_t i = 1; i < learnt.size(); ++i) {
      const std::uint32_t r = reason_[learnt[i] >> 1U];
      bool redundant = r != kNoReason;
      if (redundant) {
        const auto& rc = db_[r].lits;
        for (std::size_t k = 1; k < rc.size(); ++k) {
          const std::uint32_t v = rc[k] >> 1U;
          if (seen_[v] == 0 && level_[v] > 0) {
            redundant = false;
            break;
          }
        }
      }
      if (!redundant)
        learnt[keep++] = learnt[i];
    }
    learnt.resize(keep);
    for (auto l : to_clear_)
      seen_[l >> 1U] = 0;

    if (learnt.size() == 1)
      return 0;
    std::size_t max_i = 1;
    for (std::size_t i = 2; i < learnt.size(); ++i) {
      if (level_[learnt[i] >> 1U] > level_[learnt[max_i] >> 1U])
        max_i = i;
    }
    std::swap(learnt[1], learnt[max_i]);
    return level_[learnt[1] >> 1U];
  }

  void cancel_until(int target) {
    if (decision_level() <= target)
      return;
    const std::size_t stop = trail_lim_[static_cast<std::size_t>(target)];
    for (std::size_t c = trail_.size(); c-- > stop;) {
      const std::uint32_t v = trail_[c] >> 1U;
      assigns_[v] = kUndef;
      reason_[v] = kNoReason;
      level_[v] = -1;
      saved_negative_[v] = static_cast<std::uint8_t>(trail_[c] & 1U);
      order_.insert(v);
    }
    trail_.resize(stop);
    qhead_ = stop;
    trail_lim_.resize(static_cast<std::size_t>(target));
  }

  std::uint32_t pick_branch() {
    while (!order_.empty()) {
      const std::uint32_t v = order_.pop();
      if (assigns_[v] == kUndef)
        return 2 * v + saved_negative_[v];
    }
    return kNoLit;
  }

  void reduce() {
    ++stats_.reductions;
    std::vector<std::uint32_t> refs;
    std::vector<LearnedClauseMeta> metas;
    for (std::uint32_t cref = 0; cref < db_.size(); ++cref) {
      auto& c = db_[cref];
      if (!c.learned || c.removed)
        continue;
      const std::uint32_t implied = c.lits[0];
      c.meta.locked = reason_[implied >> 1U] == cref && value(implied) == kTrue;
      refs.push_back(cref);
      metas.push_back(c.meta);
    }
    const auto part = reduce_database(metas, config_.deletion);
    for (auto i : part.deleted) {
      auto& c = db_[refs[i]];
      c.removed = true;
      c.lits.clear();
      c.lits.shrink_to_fit();
    }
    stats_.learned_deleted += part.deleted.size();
  }

  bool restart_due() {
    if (const auto* l = std::get_if<LubyRestart>(&config_.restart))
      return conflicts_since_restart_ >= luby(restart_index_) * l->base_interval;
    const auto& g = std::get<GlucoseRestart>(config_.restart);
    const double global_mean = lbd_sum_ / static_cast<double>(stats_.conflicts);
    return glucose_restart_due(recent_lbds_, g.window, global_mean, g.margin);
  }

  void note_conflict_lbd(std::uint32_t lbd) {
    lbd_sum_ += lbd;
    ++conflicts_since_restart_;
    if (const auto* g = std::get_if<GlucoseRestart>(&config_.restart)) {
      recent_lbds_.push_back(lbd);
      if (recent_lbds_.size() > g->window)
        recent_lbds_.erase(recent_lbds_.begin());
    }
  }

  SolveStats finish(SolveStatus status) {
    SolveStats out = stats_;
    out.status = status;
    if (status == SolveStatus::Sat) {
      Assignment model(n_);
      for (std::uint32_t v = 0; v < n_; ++v)
        model.set(Var{v}, assigns_[v] == kTrue);
      if (!evaluate(formula_, model))
        throw std::logic_error("solver produced a model that does not satisfy the formula");
      out.model = std::move(model);
    }
    return out;
  }

  SolveStats search() {
    for (const auto& clause : formula_.clauses()) {
      if (clause.tautology())
        continue;
      if (clause.empty())
        return finish(SolveStatus::Unsat);
      if (clause.size() == 1) {
        const std::uint32_t lit = clause.lits()[0].code();
        if (value(lit) == kFalse)
          return finish(SolveStatus::Unsat);
        if (value(lit) == kUndef)
          enqueue(lit, kNoReason);
        continue;
      }
      ClauseRec rec;
      for (Lit l : clause)
        rec.lits.push_back(l.code());
      db_.push_back(std::move(rec));
      attach(static_cast<std::uint32_t>(db_.size() - 1));
    }

    std::vector<std::uint32_t> learnt;
    for (;;) {
      const std::uint32_t conflict = propagate();
      if (conflict != kNoReason) {
        ++stats_.conflicts;
        if (decision_level() == 0)
          return finish(SolveStatus::Unsat);
        const int back_level = analyze(conflict, learnt);
        cancel_until(back_level);
        const std::uint32_t lbd = learnt.size() == 1 ? 1U : lbd_of_levels(learnt);
        if (learnt.size() == 1) {
          enqueue(learnt[0], kNoReason);
        } else {
          ClauseRec rec;
          rec.lits = learnt;
          rec.learned = true;
          rec.meta.size = static_cast<std::uint32_t>(learnt.size());
          record_lbd(rec.meta, lbd);
          db_.push_back(std::move(rec));
          const auto cref = static_cast<std::uint32_t>(db_.size() - 1);
          attach(cref);
          bump_clause(db_[cref]);
          enqueue(learnt[0], cref);
        }
        vsids_.decay();
        clause_inc_ /= kClauseDecay;
        note_conflict_lbd(lbd);

        if (config_.conflict_budget && stats_.conflicts >= *config_.conflict_budget)
          return finish(SolveStatus::BudgetExhausted);
        if (stats_.conflicts % config_.reduce_interval == 0)
          reduce();
        if (restart_due()) {
          cancel_until(0);
          ++stats_.restarts;
          ++restart_index_;
          conflicts_since_restart_ = 0;
          recent_lbds_.clear();
        }
      } else {
        const std::uint32_t next = pick_branch();
        if (next == kNoLit)
          return finish(SolveStatus::Sat);
        ++stats_.decisions;
        trail_lim_.push_back(trail_.size());
        enqueue(next, kNoReason);
      }
    }
  }

  // Called after backjumping: the asserting literal is unassigned again and
  // was the only literal at the conflict level.
  std::uint32_t lbd_of_levels(const std::vector<std::uint32_t>& learnt) {
    ++lbd_generation_;
    std::uint32_t n = 1;  // the asserting literal's own (now undone) level
    for (std::size_t i = 1; i < learnt.size(); ++i) {
      const auto lvl = static_cast<std::size_t>(level_[learnt[i] >> 1U]);
      if (level_stamp_[lvl] != lbd_generation_) {
        level_stamp_[lvl] = lbd_generation_;
        ++n;
      }
    }
    return n;
  }

  const CnfFormula& formula_;
  SolverConfig config_;
  std::uint32_t n_;
  std::vector<std::uint8_t> assigns_;
  std::vector<int> level_;
  std::vector<std::uint32_t> reason_;
  std::vector<std::uint8_t> saved_negative_;
  std::vector<std::uint8_t> seen_;
  std::vector<std::uint32_t> to_clear_;
  std::vector<std::vector<Watcher>> watches_;
  std::vector<ClauseRec> db_;
  std::vector<std::uint32_t> trail_;
  std::vector<std::size_t> trail_lim_;
  std::size_t qhead_ = 0;
  VsidsActivity vsids_;
  VarOrder order_;
  double clause_inc_ = 1.0;
  std::vector<std::uint32_t> level_stamp_;
  std::uint32_t lbd_generation_ = 0;
  double lbd_sum_ = 0;
  std::vector<std::uint32_t> recent_lbds_;
  std::uint64_t conflicts_since_restart_ = 0;
  std::uint64_t restart_index_ = 1;
  SolveStats stats_;
};

}  // namespace

SolveStats solve(const CnfFormula& formula, const SolverConfig& config) {
  config.validate();
  Cdcl solver(formula, config);
  return solver.run();
}

}  // namespace satentropy
