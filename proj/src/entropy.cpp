#include "satentropy/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace satentropy {

mpq_class literal_ratio(const CnfFormula& formula, Var v, const ModelCount& total, const CounterBudget& budget) {
  if (total == 0)
    throw UnsatisfiableFormula();
  mpq_class r(count_conditioned(formula, Lit::pos(v), budget), total);
  r.canonicalize();
  return r;
}

double variable_entropy(double r) {
  if (!(r >= 0.0 && r <= 1.0))
    throw std::invalid_argument("ratio " + std::to_string(r) + " outside [0,1]");
  auto term = [](double p) { return p == 0.0 ? 0.0 : -p * std::log2(p); };
  return term(r) + term(1.0 - r);
}

double variable_entropy(const mpq_class& r) {
  if (r < 0 || r > 1)
    throw std::invalid_argument("ratio " + r.get_str() + " outside [0,1]");
  if (r == 0 || r == 1)
    return 0.0;
  const double p = r.get_d();
  const double q = mpq_class(1 - r).get_d();
  return -p * std::log2(p) - q * std::log2(q);
}

FormulaProfile profile_formula(const CnfFormula& formula, const CountFn& count) {
  FormulaProfile prof;
  prof.num_vars = formula.num_vars();
  prof.num_clauses = formula.num_clauses();
  prof.model_count = count(formula, std::nullopt);
  if (prof.model_count == 0)
    throw UnsatisfiableFormula();

  ModelCount space = 1;
  mpz_mul_2exp(space.get_mpz_t(), space.get_mpz_t(), prof.num_vars);
  prof.density = mpq_class(prof.model_count, space).get_d();

  prof.variables.reserve(prof.num_vars);
  double sum = 0;
  for (std::uint32_t i = 0; i < prof.num_vars; ++i) {
    VariableProfile vp;
    vp.var = Var{i};
    vp.count_pos = count(formula, Lit::pos(vp.var));
    mpq_class r(vp.count_pos, prof.model_count);
    r.canonicalize();
    vp.ratio_pos = r.get_d();
    vp.entropy = variable_entropy(r);
    vp.is_backbone = vp.count_pos == 0 || vp.count_pos == prof.model_count;
    prof.backbone_count += vp.is_backbone ? 1U : 0U;
    sum += vp.entropy;
    prof.variables.push_back(std::move(vp));
  }
  // mean over zero variables is taken as 1, matching the clause-free case
  prof.entropy = prof.num_vars == 0 ? 1.0 : sum / prof.num_vars;
  return prof;
}

FormulaProfile profile_formula(const CnfFormula& formula, ModelCounter& counter) {
  return profile_formula(formula, [&counter](const CnfFormula& f, std::optional<Lit> l) {
    if (!l)
      return counter.count(f);
    const Lit assumption[] = {*l};
    return counter.count(f, assumption);
  });
}

FormulaProfile profile_formula(const CnfFormula& formula, const CounterBudget& budget) {
  ModelCounter counter(budget);
  return profile_formula(formula, counter);
}

std::vector<Lit> backbone(const FormulaProfile& profile) {
  std::vector<Lit> out;
  for (const auto& vp : profile.variables) {
    if (vp.is_backbone)
      out.push_back(Lit(vp.var, vp.count_pos == 0));
  }
  return out;
}

std::vector<Lit> backbone(const CnfFormula& formula, const CounterBudget& budget) {
  return backbone(profile_formula(formula, budget));
}

std::vector<std::size_t> entropy_histogram(const FormulaProfile& profile, std::size_t bins) {
  if (bins == 0)
    throw std::invalid_argument("histogram needs at least one bin");
  std::vector<std::size_t> hist(bins + 1, 0);
  for (const auto& vp : profile.variables) {
    if (vp.entropy == 0.0) {
      ++hist[0];
      continue;
    }
    auto b = static_cast<std::size_t>(std::ceil(vp.entropy * static_cast<double>(bins)));
    hist[std::clamp<std::size_t>(b, 1, bins)] += 1;
  }
  return hist;
}

}  // namespace satentropy
