#pragma once

#include "satentropy/cnf.hpp"
#include "satentropy/counter.hpp"

#include <gmpxx.h>

#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

namespace satentropy {

/// Thrown when entropy, density or backbone is requested for a formula
/// without solutions.
class UnsatisfiableFormula : public std::domain_error {
public:
  UnsatisfiableFormula() : std::domain_error("entropy undefined for unsatisfiable formula") {}
};

struct VariableProfile {
  Var var;
  ModelCount count_pos;  // #(φ ∧ v)
  double ratio_pos = 0;  // r(v)
  double entropy = 0;    // e(v)
  bool is_backbone = false;
};

struct FormulaProfile {
  std::uint32_t num_vars = 0;
  std::size_t num_clauses = 0;
  ModelCount model_count;
  double entropy = 0;  // mean of e(v) over every variable, backbones included
  double density = 0;  // model_count / 2^num_vars
  std::uint32_t backbone_count = 0;
  std::vector<VariableProfile> variables;
};

/// Counting primitive used by profile_formula: #(formula ∧ assumption).
using CountFn = std::function<ModelCount(const CnfFormula&, std::optional<Lit>)>;

/// Exact r(v) = #(φ ∧ v) / #φ.
mpq_class literal_ratio(const CnfFormula& formula, Var v, const ModelCount& total, const CounterBudget& budget = {});

/// -r log2 r - (1-r) log2 (1-r) with 0 log2 0 = 0. Rejects r outside [0,1].
double variable_entropy(double r);
/// Same, taking the exact ratio so that 1 - r is formed before rounding.
double variable_entropy(const mpq_class& r);

/// Issues exactly num_vars + 1 calls to `count`: one unconditioned, then one
/// per variable conditioned on its positive literal.
FormulaProfile profile_formula(const CnfFormula& formula, const CountFn& count);
FormulaProfile profile_formula(const CnfFormula& formula, ModelCounter& counter);
FormulaProfile profile_formula(const CnfFormula& formula, const CounterBudget& budget = {});

/// Backbone literals (r(l) = 1) read off an existing profile, in variable order.
std::vector<Lit> backbone(const FormulaProfile& profile);
std::vector<Lit> backbone(const CnfFormula& formula, const CounterBudget& budget = {});

/// Bin 0 holds variables with e(v) exactly 0; bins 1..bins split (0,1] evenly.
std::vector<std::size_t> entropy_histogram(const FormulaProfile& profile, std::size_t bins = 10);

}  // namespace satentropy
