#include "satentropy/benchgen.hpp"
#include "satentropy/cnf.hpp"
#include "satentropy/counter.hpp"
#include "satentropy/entropy.hpp"
#include "satentropy/pipeline.hpp"
#include "satentropy/solver.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace satentropy;
using nlohmann::json;

namespace {

enum Exit : int { kOk = 0, kUsage = 1, kRuntime = 2, kBudget = 3, kUnsat = 20 };

class UsageError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

std::map<std::string, std::string> load_config(const std::string& path) {
  if (path.empty())
    return {};
  std::ifstream in(path);
  if (!in)
    throw UsageError("cannot open config file " + path);
  return parse_key_values(in);
}

json stats_json(const SolveStats& s, const SolverConfig& c) {
  json j;
  j["status"] = s.status == SolveStatus::Sat ? "SAT" : s.status == SolveStatus::Unsat ? "UNSAT" : "BUDGET";
  j["conflicts"] = s.conflicts;
  j["decisions"] = s.decisions;
  j["propagations"] = s.propagations;
  j["restarts"] = s.restarts;
  j["reductions"] = s.reductions;
  j["learned_kept"] = s.learned_kept;
  j["learned_deleted"] = s.learned_deleted;
  j["restart"] = to_string(c.restart);
  j["keep"] = to_string(c.deletion);
  j["decay"] = c.decay;
  j["reduce_interval"] = c.reduce_interval;
  j["seed"] = c.seed;
  return j;
}

struct CountArgs {
  std::string file;
  double time_limit = 0;
  std::uint64_t max_decisions = 0;
};

int run_count(const CountArgs& a) {
  CounterBudget budget;
  if (a.time_limit > 0)
    budget.time_limit = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::duration<double>(a.time_limit));
  if (a.max_decisions > 0)
    budget.max_decisions = a.max_decisions;
  const auto count = count_models(read_dimacs_file(a.file), budget);
  std::cout << count.get_str() << '\n';
  return count == 0 ? kUnsat : kOk;
}

struct ProfileArgs {
  std::string file;
  bool json = false;
};

int run_profile(const ProfileArgs& a) {
  const auto f = read_dimacs_file(a.file);
  FormulaProfile p;
  try {
    p = profile_formula(f);
  } catch (const UnsatisfiableFormula& e) {
    std::cerr << "satentropy: " << a.file << ": " << e.what() << '\n';
    return kUnsat;
  }
  if (a.json) {
    json j;
    j["vars"] = p.num_vars;
    j["clauses"] = p.num_clauses;
    j["model_count"] = p.model_count.get_str();
    j["entropy"] = p.entropy;
    j["density"] = p.density;
    j["backbone_count"] = p.backbone_count;
    j["formula_id"] = content_hash(f);
    json vars = json::array();
    for (const auto& v : p.variables)
      vars.push_back({{"v", v.var.dimacs()}, {"r", v.ratio_pos}, {"e", v.entropy}});
    j["per_var"] = vars;
    std::cout << j.dump() << '\n';
    return kOk;
  }
  std::cout << "vars " << p.num_vars << '\n'
            << "clauses " << p.num_clauses << '\n'
            << "model_count " << p.model_count.get_str() << '\n'
            << "entropy " << json(p.entropy).dump() << '\n'
            << "density " << json(p.density).dump() << '\n'
            << "backbone " << p.backbone_count << '\n';
  for (const auto& v : p.variables)
    std::cout << "var " << v.var.dimacs() << " r " << json(v.ratio_pos).dump() << " e " << json(v.entropy).dump()
              << '\n';
  return kOk;
}

struct GenArgs {
  std::uint32_t vars = 20;
  std::uint32_t clauses = 85;
  std::vector<std::uint32_t> backbones;
  std::uint32_t per_bucket = 50;
  std::uint64_t seed = 0;
  std::string out;
  std::uint64_t max_attempts = 100000;
  bool force = false;
  unsigned jobs = 1;
};

int run_gen(const GenArgs& a) {
  BenchSpec base;
  base.num_vars = a.vars;
  base.num_clauses = a.clauses;
  base.seed = a.seed;
  base.max_attempts = a.max_attempts;
  base.force = a.force;
  try {
    base.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  try {
    const auto suite = build_suite(a.backbones, a.per_bucket, base, a.jobs);
    write_suite(suite, a.out);
    std::cerr << "satentropy: wrote " << suite.instances.size() << " formulas (seed " << a.seed << ") to " << a.out
              << '\n';
    std::cout << (std::filesystem::path(a.out) / "manifest.csv").string() << '\n';
  } catch (const GenerationFailed& e) {
    std::cerr << "satentropy: " << e.what() << "\nbackbone histogram of satisfiable draws:\n";
    for (const auto& [bb, n] : e.histogram())
      std::cerr << "  " << bb << ": " << n << '\n';
    return kRuntime;
  }
  return kOk;
}

struct SolveArgs {
  std::string file;
  std::string restart;
  std::string keep;
  std::optional<double> decay;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint32_t> reduce_interval;
  std::optional<std::uint64_t> conflict_budget;
  std::string config;
};

SolverConfig solver_config(const std::string& config_file, const std::string& restart, const std::string& keep,
                           std::optional<double> decay, std::optional<std::uint32_t> reduce_interval,
                           std::map<std::string, std::string>* rest = nullptr) {
  SolverConfig c;
  try {
    auto unused = apply_solver_settings(c, load_config(config_file));
    if (!restart.empty())
      c.restart = parse_restart(restart);
    if (!keep.empty())
      c.deletion = parse_deletion(keep);
    if (decay)
      c.decay = *decay;
    if (reduce_interval)
      c.reduce_interval = *reduce_interval;
    c.validate();
    if (rest != nullptr)
      *rest = std::move(unused);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return c;
}

int run_solve(const SolveArgs& a) {
  auto c = solver_config(a.config, a.restart, a.keep, a.decay, a.reduce_interval);
  if (a.seed)
    c.seed = *a.seed;
  if (a.conflict_budget)
    c.conflict_budget = *a.conflict_budget;
  const auto f = read_dimacs_file(a.file);
  const auto s = solve(f, c);
  std::cout << stats_json(s, c).dump() << '\n';
  if (s.status == SolveStatus::Sat) {
    std::cout << 'v';
    for (std::uint32_t v = 0; v < f.num_vars(); ++v)
      std::cout << ' ' << (s.model.value(Var{v}) == Value::True ? "" : "-") << Var{v}.dimacs();
    std::cout << " 0\n";
    return kOk;
  }
  return s.status == SolveStatus::Unsat ? kUnsat : kBudget;
}

struct ExperimentArgs {
  std::string plan;
  std::string suite;
  std::string out;
  unsigned jobs = 1;
  std::uint64_t seed = 0;
  std::optional<std::uint32_t> runs;
  std::optional<std::size_t> k;
  std::string config;
  std::optional<std::uint32_t> reduce_interval;
  std::string cache_dir;
};

int run_experiment_cmd(const ExperimentArgs& a) {
  std::map<std::string, std::string> rest;
  const auto base = solver_config(a.config, "", "", std::nullopt, a.reduce_interval, &rest);
  ExperimentPlan plan;
  try {
    plan = make_plan(parse_plan_name(a.plan), base);
    if (auto it = rest.find("runs"); it != rest.end())
      plan.runs_per_formula = static_cast<std::uint32_t>(std::stoul(it->second));
    if (auto it = rest.find("k"); it != rest.end())
      plan.bootstrap_k = std::stoull(it->second);
    for (const auto& [key, value] : rest) {
      if (key != "runs" && key != "k")
        throw std::invalid_argument("unknown config key " + key);
    }
    if (a.runs)
      plan.runs_per_formula = *a.runs;
    if (a.k)
      plan.bootstrap_k = *a.k;
    plan.seed = a.seed;
    plan.validate();
  } catch (const std::logic_error& e) {
    throw UsageError(e.what());
  }
  RunOptions options;
  options.jobs = a.jobs;
  if (!a.cache_dir.empty())
    options.cache_dir = a.cache_dir;
  options.log = [](const std::string& m) { std::cerr << "satentropy: " << m << '\n'; };
  std::cerr << "satentropy: plan " << a.plan << " (" << plan.label_a << " vs " << plan.label_b << "), seed " << a.seed
            << '\n';
  const auto records = run_experiment(plan, a.suite, a.out, options);
  emit_report(plan, records, a.out);
  std::cout << (std::filesystem::path(a.out) / "table_regression.csv").string() << '\n';
  return kOk;
}

int run_report(const std::string& in, const std::string& out) {
  const auto plan = read_plan(std::filesystem::path(in) / "plan.json");
  const auto records = read_records(std::filesystem::path(in) / "records.jsonl");
  const auto dest = out.empty() ? in : out;
  emit_report(plan, records, dest);
  std::cout << (std::filesystem::path(dest) / "table_regression.csv").string() << '\n';
  return kOk;
}

struct AnalyzeArgs {
  std::string file;
  std::string test;
  std::size_t k = 1000;
  std::uint64_t seed = 0;
  std::string label_a;
  std::string label_b;
  bool text = false;
};

int run_analyze(const AnalyzeArgs& a) {
  const auto csv = read_records_csv(a.file);
  if (csv.records.empty())
    throw std::runtime_error(a.file + ": no records");
  std::string la = a.label_a.empty() ? csv.labels.at(0) : a.label_a;
  std::string lb = a.label_b;
  if (lb.empty() && csv.labels.size() > 1)
    lb = csv.labels.at(1);
  Table table;
  if (a.test == "beta-gap") {
    std::vector<std::string> labels{la};
    if (!lb.empty() && lb != la)
      labels.push_back(lb);
    table = hardness_table(csv.records, labels, a.k, a.seed);
  } else {
    if (lb.empty() || lb == la)
      throw UsageError("--test " + a.test + " needs two conflict columns");
    const auto full = regression_table(csv.records, la, lb, a.k, a.seed);
    if (a.test == "delta")
      table = select_columns(full, {"measure", "delta_ci", "delta_p"});
    else
      table = select_columns(full, {"measure", "delta_beta_ci", "delta_beta_p", "delta_beta0_ci", "delta_beta0_p"});
  }
  std::cout << (a.text ? to_aligned_text(table) : to_csv(table));
  std::cerr << "satentropy: " << a.test << " on " << csv.records.size() << " records, k " << a.k << ", seed " << a.seed
            << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact model counting, formula entropy and CDCL heuristic experiments"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");
  int rc = kOk;

  CountArgs count_args;
  auto* count = app.add_subcommand("count", "Print the exact model count (exit 20 when zero)");
  count->add_option("file", count_args.file, "DIMACS CNF file")->required()->check(CLI::ExistingFile);
  count->add_option("--time-limit", count_args.time_limit, "Seconds before giving up (exit 3)");
  count->add_option("--max-decisions", count_args.max_decisions, "Counter decision budget (exit 3)");
  count->callback([&] { rc = run_count(count_args); });

  ProfileArgs profile_args;
  auto* profile = app.add_subcommand("profile", "Model count, entropy, density and backbone");
  profile->add_option("file", profile_args.file, "DIMACS CNF file")->required()->check(CLI::ExistingFile);
  profile->add_flag("--json", profile_args.json, "One JSON object on stdout");
  profile->callback([&] { rc = run_profile(profile_args); });

  GenArgs gen_args;
  auto* gen = app.add_subcommand("gen", "Generate a random 3-SAT suite bucketed by backbone size");
  gen->add_option("--vars", gen_args.vars, "Variables per formula")->capture_default_str();
  gen->add_option("--clauses", gen_args.clauses, "Clauses per formula")->capture_default_str();
  gen->add_option("--backbones", gen_args.backbones, "Backbone bucket sizes, e.g. 2,6,10")
      ->required()
      ->delimiter(',');
  gen->add_option("--per-bucket", gen_args.per_bucket, "Formulas per bucket")->capture_default_str();
  gen->add_option("--seed", gen_args.seed, "Base seed")->required();
  gen->add_option("--out", gen_args.out, "Output directory")->required();
  gen->add_option("--max-attempts", gen_args.max_attempts, "Draws before giving up")->capture_default_str();
  gen->add_flag("--force", gen_args.force, "Add model-consistent unit clauses to reach rare buckets");
  gen->add_option("--jobs", gen_args.jobs, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  gen->callback([&] { rc = run_gen(gen_args); });

  SolveArgs solve_args;
  auto* solve_cmd = app.add_subcommand("solve", "Run the CDCL solver and print its statistics as JSON");
  solve_cmd->add_option("file", solve_args.file, "DIMACS CNF file")->required()->check(CLI::ExistingFile);
  solve_cmd->add_option("--restart", solve_args.restart, "luby:BASE or glucose:WINDOW:MARGIN");
  solve_cmd->add_option("--keep", solve_args.keep, "lbd:CUT or size:N");
  solve_cmd->add_option("--decay", solve_args.decay, "VSIDS decay factor");
  solve_cmd->add_option("--seed", solve_args.seed, "Solver seed");
  solve_cmd->add_option("--reduce-interval", solve_args.reduce_interval, "Conflicts between database reductions");
  solve_cmd->add_option("--conflict-budget", solve_args.conflict_budget, "Stop after this many conflicts (exit 3)");
  solve_cmd->add_option("--config", solve_args.config, "key = value defaults file")->check(CLI::ExistingFile);
  solve_cmd->callback([&] { rc = run_solve(solve_args); });

  auto* experiment = app.add_subcommand("experiment", "Paired heuristic experiments");
  experiment->require_subcommand(1);
  ExperimentArgs exp_args;
  auto* run = experiment->add_subcommand("run", "Solve a suite under both configs of a plan and write the report");
  run->add_option("--plan", exp_args.plan, "deletion|lbdcut|restarts|decay|hardness")
      ->required()
      ->check(CLI::IsMember({"deletion", "lbdcut", "restarts", "decay", "hardness"}));
  run->add_option("--suite", exp_args.suite, "Suite directory")->required()->check(CLI::ExistingDirectory);
  run->add_option("--out", exp_args.out, "Output directory")->required();
  run->add_option("--jobs", exp_args.jobs, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  run->add_option("--seed", exp_args.seed, "Experiment seed")->capture_default_str();
  run->add_option("--runs", exp_args.runs, "Solver runs per formula and config (default 5)");
  run->add_option("--k", exp_args.k, "Bootstrap iterations (default 1000)");
  run->add_option("--config", exp_args.config, "key = value defaults file")->check(CLI::ExistingFile);
  run->add_option("--reduce-interval", exp_args.reduce_interval, "Conflicts between database reductions");
  run->add_option("--cache-dir", exp_args.cache_dir, "Profile cache (default $SATENTROPY_CACHE_DIR or OUT/profile_cache)");
  run->callback([&] { rc = run_experiment_cmd(exp_args); });

  std::string report_in;
  std::string report_out;
  auto* report = experiment->add_subcommand("report", "Regenerate the report from persisted records");
  report->add_option("--in", report_in, "Experiment output directory")->required()->check(CLI::ExistingDirectory);
  report->add_option("--out", report_out, "Report directory (default: --in)");
  report->callback([&] { rc = run_report(report_in, report_out); });

  AnalyzeArgs analyze_args;
  auto* analyze = app.add_subcommand("analyze", "Statistical tests on a records.csv");
  analyze->add_option("file", analyze_args.file, "records.csv")->required()->check(CLI::ExistingFile);
  analyze->add_option("--test", analyze_args.test, "delta|delta-beta|beta-gap")
      ->required()
      ->check(CLI::IsMember({"delta", "delta-beta", "beta-gap"}));
  analyze->add_option("--k", analyze_args.k, "Bootstrap iterations")->capture_default_str()->check(CLI::PositiveNumber);
  analyze->add_option("--seed", analyze_args.seed, "Bootstrap seed")->capture_default_str();
  analyze->add_option("--a", analyze_args.label_a, "First conflicts column (default: first)");
  analyze->add_option("--b", analyze_args.label_b, "Second conflicts column (default: second)");
  analyze->add_flag("--text", analyze_args.text, "Aligned text instead of CSV");
  analyze->callback([&] { rc = run_analyze(analyze_args); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  } catch (const UsageError& e) {
    std::cerr << "satentropy: " << e.what() << '\n';
    return kUsage;
  } catch (const BudgetExhausted& e) {
    std::cerr << "satentropy: " << e.what() << '\n';
    return kBudget;
  } catch (const std::exception& e) {
    std::cerr << "satentropy: " << e.what() << '\n';
    return kRuntime;
  }
  return rc;
}
