#pragma once

#include "satentropy/cnf.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace satentropy {

struct LubyRestart {
  std::uint32_t base_interval = 100;
  friend bool operator==(const LubyRestart&, const LubyRestart&) = default;
};

/// Restart when the recent-window LBD mean, scaled by `margin`, exceeds the
/// mean LBD of all learned clauses so far.
struct GlucoseRestart {
  std::uint32_t window = 50;
  double margin = 0.8;
  friend bool operator==(const GlucoseRestart&, const GlucoseRestart&) = default;
};

using RestartPolicy = std::variant<LubyRestart, GlucoseRestart>;

/// Learned clauses whose LBD-cut (lowest LBD seen) is at most `cut` are never deleted.
struct KeepLbdCutAtMost {
  std::uint32_t cut = 5;
  friend bool operator==(const KeepLbdCutAtMost&, const KeepLbdCutAtMost&) = default;
};

/// Learned clauses with at most `size` literals are never deleted.
struct KeepSizeAtMost {
  std::uint32_t size = 12;
  friend bool operator==(const KeepSizeAtMost&, const KeepSizeAtMost&) = default;
};

using DeletionCriterion = std::variant<KeepLbdCutAtMost, KeepSizeAtMost>;

struct SolverConfig {
  RestartPolicy restart = GlucoseRestart{};
  DeletionCriterion deletion = KeepLbdCutAtMost{};
  double decay = 0.95;
  std::uint32_t reduce_interval = 2000;
  std::uint64_t seed = 0;
  /// Recompute the LBD of learned clauses taking part in conflict analysis.
  bool recompute_lbd = true;
  std::optional<std::uint64_t> conflict_budget;

  /// Throws std::invalid_argument on out-of-range parameters.
  void validate() const;

  friend bool operator==(const SolverConfig&, const SolverConfig&) = default;
};

/// "luby:100" or "glucose:50:0.8".
RestartPolicy parse_restart(const std::string& text);
/// "lbd:5" or "size:12".
DeletionCriterion parse_deletion(const std::string& text);
std::string to_string(const RestartPolicy& policy);
std::string to_string(const DeletionCriterion& criterion);

enum class SolveStatus { Sat, Unsat, BudgetExhausted };

struct SolveStats {
  SolveStatus status = SolveStatus::Unsat;
  Assignment model;  // total when status == Sat
  std::uint64_t conflicts = 0;
  std::uint64_t decisions = 0;
  std::uint64_t propagations = 0;
  std::uint64_t restarts = 0;
  std::uint64_t reductions = 0;
  std::uint64_t learned_kept = 0;
  std::uint64_t learned_deleted = 0;

  friend bool operator==(const SolveStats&, const SolveStats&) = default;
};

struct LearnedClauseMeta {
  std::uint32_t lbd_current = 0;
  std::uint32_t lbd_cut = 0;  // lowest LBD observed so far
  std::uint32_t size = 0;
  double activity = 0;
  bool locked = false;  // currently the reason for an assignment
};

/// Records a fresh LBD measurement; lbd_cut only ever decreases.
void record_lbd(LearnedClauseMeta& meta, std::uint32_t lbd);

/// Distinct decision levels among the clause's literals. `level_of[v]` is
/// the level of variable v, negative when unassigned (rejected).
std::uint32_t compute_lbd(std::span<const Lit> clause, std::span<const int> level_of);

/// i-th term (1-based) of the Luby sequence 1,1,2,1,1,2,4,...
std::uint64_t luby(std::uint64_t i);

/// True iff `recent` holds at least `window` values and
/// mean(last `window` values) * margin > global_mean.
bool glucose_restart_due(std::span<const std::uint32_t> recent, std::size_t window, double global_mean,
                         double margin);

struct ReducePartition {
  std::vector<std::size_t> kept;
  std::vector<std::size_t> deleted;
};

/// Clauses meeting the keep criterion and locked clauses are kept; of the
/// rest, the lower-activity half is deleted. Indices refer to `learned`.
ReducePartition reduce_database(std::span<const LearnedClauseMeta> learned, const DeletionCriterion& criterion);

/// Exponential VSIDS: bumps add a growing increment, decay() divides the
/// increment by the decay factor, and all scores are rescaled together when
/// they grow too large.
class VsidsActivity {
public:
  VsidsActivity(std::uint32_t num_vars, double decay);

  void bump(Var v);
  void decay();
  [[nodiscard]] double activity(Var v) const { return activity_[v.index]; }
  void set_initial(Var v, double value) { activity_[v.index] = value; }
  [[nodiscard]] std::uint32_t num_vars() const { return static_cast<std::uint32_t>(activity_.size()); }

private:
  std::vector<double> activity_;
  double increment_ = 1.0;
  double decay_;
};

/// CDCL with two watched literals, first-UIP learning, phase saving and
/// non-chronological backjumping. Deterministic for a fixed (formula, config).
SolveStats solve(const CnfFormula& formula, const SolverConfig& config = {});

}  // namespace satentropy
