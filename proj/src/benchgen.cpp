#include "satentropy/benchgen.hpp"

#include "satentropy/seed.hpp"
#include "satentropy/solver.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

namespace satentropy {

void BenchSpec::validate() const {
  if (num_vars < 3)
    throw std::invalid_argument("random 3-SAT needs at least 3 variables");
  if (num_clauses < 1)
    throw std::invalid_argument("need at least one clause");
  if (target_backbone > num_vars)
    throw std::invalid_argument("target backbone exceeds variable count");
  if (max_attempts < 1)
    throw std::invalid_argument("max_attempts must be positive");
}

CnfFormula gen_random_3sat(std::uint32_t num_vars, std::uint32_t num_clauses, std::uint64_t seed) {
  if (num_vars < 3)
    throw std::invalid_argument("random 3-SAT needs at least 3 variables, got " + std::to_string(num_vars));
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::uint32_t> pick(0, num_vars - 1);
  std::bernoulli_distribution negative(0.5);
  CnfFormula f(num_vars);
  for (std::uint32_t i = 0; i < num_clauses; ++i) {
    std::uint32_t v[3];
    v[0] = pick(rng);
    do {
      v[1] = pick(rng);
    } while (v[1] == v[0]);
    do {
      v[2] = pick(rng);
    } while (v[2] == v[0] || v[2] == v[1]);
    std::vector<Lit> lits;
    for (auto x : v)
      lits.emplace_back(Var{x}, negative(rng));
    f.add_clause(Clause(std::move(lits)));
  }
  return f;
}

std::uint64_t attempt_seed(std::uint64_t base_seed, std::uint64_t attempt) { return derive_seed(base_seed, attempt); }

namespace {

struct Draw {
  bool satisfiable = false;
  GeneratedInstance instance;
};

Draw draw(const BenchSpec& spec, std::uint64_t attempt, ModelCounter& counter) {
  Draw d;
  d.instance.attempt = attempt;
  d.instance.seed = attempt_seed(spec.seed, attempt);
  d.instance.formula = gen_random_3sat(spec.num_vars, spec.num_clauses, d.instance.seed);
  if (counter.count(d.instance.formula) == 0)
    return d;
  d.satisfiable = true;
  d.instance.profile = profile_formula(d.instance.formula, counter);
  return d;
}

// Fixes non-backbone variables to their value in one model, one unit clause
// at a time, until the backbone reaches the target. False on overshoot.
bool force_backbone(GeneratedInstance& inst, std::uint32_t target, ModelCounter& counter) {
  SolverConfig config;
  config.seed = inst.seed;
  const auto solved = solve(inst.formula, config);
  Assignment model = solved.model;
  for (std::uint32_t v = 0; v < inst.formula.num_vars() && inst.profile.backbone_count < target; ++v) {
    if (inst.profile.variables[v].is_backbone)
      continue;
    const bool value = model.value(Var{v}) == Value::True;
    inst.formula.add_clause(Clause(std::vector<Lit>{Lit(Var{v}, !value)}));
    ++inst.forced_units;
    inst.profile = profile_formula(inst.formula, counter);
  }
  return inst.profile.backbone_count == target;
}

}  // namespace

GeneratedInstance gen_with_backbone(const BenchSpec& spec) {
  spec.validate();
  ModelCounter counter;
  std::map<std::uint32_t, std::uint64_t> histogram;
  for (std::uint64_t attempt = 0; attempt < spec.max_attempts; ++attempt) {
    Draw d = draw(spec, attempt, counter);
    if (!d.satisfiable)
      continue;
    ++histogram[d.instance.profile.backbone_count];
    if (d.instance.profile.backbone_count == spec.target_backbone)
      return std::move(d.instance);
    if (spec.force && d.instance.profile.backbone_count < spec.target_backbone &&
        force_backbone(d.instance, spec.target_backbone, counter))
      return std::move(d.instance);
  }
  throw GenerationFailed("no instance with backbone " + std::to_string(spec.target_backbone) + " in " +
                             std::to_string(spec.max_attempts) + " attempts",
                         std::move(histogram));
}

Suite build_suite(const std::vector<std::uint32_t>& backbones, std::uint32_t per_bucket, const BenchSpec& base,
                  unsigned jobs) {
  base.validate();
  jobs = std::max(1U, jobs);
  for (auto b : backbones) {
    if (b > base.num_vars)
      throw std::invalid_argument("bucket backbone " + std::to_string(b) + " exceeds variable count");
  }
  std::map<std::uint32_t, std::vector<GeneratedInstance>> buckets;
  for (auto b : backbones)
    buckets[b];
  std::map<std::uint32_t, std::uint64_t> histogram;
  std::vector<ModelCounter> counters(jobs);

  auto full = [&] {
    return std::all_of(buckets.begin(), buckets.end(), [&](const auto& kv) { return kv.second.size() >= per_bucket; });
  };
  // Smallest unfilled bucket the draw can be forced into.
  auto force_target = [&](std::uint32_t observed) -> std::optional<std::uint32_t> {
    for (const auto& [target, items] : buckets) {
      if (target > observed && items.size() < per_bucket)
        return target;
    }
    return std::nullopt;
  };

  const std::uint64_t batch = 32ULL * jobs;
  std::uint64_t next = 0;
  while (!full() && next < base.max_attempts) {
    const std::uint64_t count = std::min(batch, base.max_attempts - next);
    std::vector<Draw> draws(count);
    std::vector<std::thread> workers;
    for (unsigned w = 0; w < jobs; ++w) {
      workers.emplace_back([&, w] {
        for (std::uint64_t i = w; i < count; i += jobs)
          draws[i] = draw(base, next + i, counters[w]);
      });
    }
    for (auto& t : workers)
      t.join();
    for (auto& d : draws) {
      if (!d.satisfiable)
        continue;
      const auto bb = d.instance.profile.backbone_count;
      ++histogram[bb];
      auto it = buckets.find(bb);
      if (it != buckets.end() && it->second.size() < per_bucket) {
        it->second.push_back(std::move(d.instance));
        continue;
      }
      if (!base.force)
        continue;
      if (auto target = force_target(bb); target && force_backbone(d.instance, *target, counters[0]))
        buckets[*target].push_back(std::move(d.instance));
    }
    next += count;
  }
  if (!full()) {
    std::ostringstream msg;
    msg << "suite incomplete after " << base.max_attempts << " attempts:";
    for (const auto& [target, items] : buckets)
      msg << " backbone " << target << " has " << items.size() << "/" << per_bucket << ";";
    throw GenerationFailed(msg.str(), std::move(histogram));
  }

  Suite suite;
  for (auto& [target, items] : buckets) {
    for (std::size_t i = 0; i < items.size(); ++i) {
      auto& inst = items[i];
      char name[64];
      std::snprintf(name, sizeof(name), "bb%03u_%04zu.cnf", target, i);
      ManifestRow row;
      row.file = name;
      row.seed = inst.seed;
      row.target_backbone = target;
      row.backbone = inst.profile.backbone_count;
      row.entropy = inst.profile.entropy;
      row.density = inst.profile.density;
      row.formula_id = content_hash(inst.formula);
      row.forced_units = inst.forced_units;
      suite.manifest.push_back(std::move(row));
      suite.instances.push_back(std::move(inst));
    }
  }
  return suite;
}

void write_suite(const Suite& suite, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < suite.instances.size(); ++i) {
    std::ofstream out(dir / suite.manifest[i].file);
    out << "c random 3-SAT, seed " << suite.manifest[i].seed << ", backbone " << suite.manifest[i].backbone;
    if (suite.manifest[i].forced_units > 0)
      out << ", forced units " << suite.manifest[i].forced_units;
    out << '\n';
    write_dimacs(out, suite.instances[i].formula);
  }
  std::ofstream csv(dir / "manifest.csv");
  csv << "file,seed,target_backbone,backbone,entropy,density,formula_id,forced_units\n";
  char buf[512];
  for (const auto& r : suite.manifest) {
    std::snprintf(buf, sizeof(buf), "%s,%llu,%u,%u,%.17g,%.17g,%s,%u\n", r.file.c_str(),
                  static_cast<unsigned long long>(r.seed), r.target_backbone, r.backbone, r.entropy, r.density,
                  r.formula_id.c_str(), r.forced_units);
    csv << buf;
  }
}

std::vector<ManifestRow> read_manifest(const std::filesystem::path& csv) {
  std::ifstream in(csv);
  if (!in)
    throw std::runtime_error("cannot open manifest " + csv.string());
  std::vector<ManifestRow> rows;
  std::string line;
  std::getline(in, line);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty())
      continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');)
      cells.push_back(cell);
    if (cells.size() != 8)
      throw std::runtime_error(csv.string() + ":" + std::to_string(line_no) + ": expected 8 columns");
    ManifestRow r;
    r.file = cells[0];
    r.seed = std::stoull(cells[1]);
    r.target_backbone = static_cast<std::uint32_t>(std::stoul(cells[2]));
    r.backbone = static_cast<std::uint32_t>(std::stoul(cells[3]));
    r.entropy = std::stod(cells[4]);
    r.density = std::stod(cells[5]);
    r.formula_id = cells[6];
    r.forced_units = static_cast<std::uint32_t>(std::stoul(cells[7]));
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace satentropy
