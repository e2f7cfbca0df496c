#include "satentropy/pipeline.hpp"

#include "satentropy/benchgen.hpp"
#include "satentropy/seed.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace satentropy {

using nlohmann::json;

namespace {

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), pattern, v);
  return buf;
}

std::string fmt_full(double v) { return fmt("%.17g", v); }

// 2 decimals, with "-0.00" printed as "0.00".
std::string fmt2(double v) {
  std::string s = fmt("%.2f", v);
  return s == "-0.00" ? "0.00" : s;
}

std::string decay_label(double decay) { return "decay:" + fmt("%g", decay); }

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos)
    return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

json config_to_json(const SolverConfig& c) {
  json j;
  j["restart"] = to_string(c.restart);
  j["keep"] = to_string(c.deletion);
  j["decay"] = c.decay;
  j["reduce_interval"] = c.reduce_interval;
  j["recompute_lbd"] = c.recompute_lbd;
  j["conflict_budget"] = c.conflict_budget ? json(*c.conflict_budget) : json(nullptr);
  return j;
}

SolverConfig config_from_json(const json& j) {
  SolverConfig c;
  c.restart = parse_restart(j.at("restart").get<std::string>());
  c.deletion = parse_deletion(j.at("keep").get<std::string>());
  c.decay = j.at("decay").get<double>();
  c.reduce_interval = j.at("reduce_interval").get<std::uint32_t>();
  c.recompute_lbd = j.at("recompute_lbd").get<bool>();
  if (!j.at("conflict_budget").is_null())
    c.conflict_budget = j.at("conflict_budget").get<std::uint64_t>();
  return c;
}

json plan_to_json(const ExperimentPlan& p) {
  json j;
  j["plan"] = to_string(p.name);
  j["label_a"] = p.label_a;
  j["label_b"] = p.label_b;
  j["config_a"] = config_to_json(p.config_a);
  j["config_b"] = config_to_json(p.config_b);
  j["runs_per_formula"] = p.runs_per_formula;
  j["seed"] = p.seed;
  j["bootstrap_k"] = p.bootstrap_k;
  return j;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out)
    throw std::runtime_error("write failed for " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string csv_line(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i > 0)
      out += ',';
    const bool quote = cells[i].find_first_of(",\"\n") != std::string::npos;
    if (!quote) {
      out += cells[i];
      continue;
    }
    out += '"';
    for (char c : cells[i]) {
      if (c == '"')
        out += '"';
      out += c;
    }
    out += '"';
  }
  return out + '\n';
}

std::string aligned_rows(const Table& rows) {
  std::vector<std::size_t> width;
  for (const auto& r : rows) {
    width.resize(std::max(width.size(), r.size()));
    for (std::size_t i = 0; i < r.size(); ++i)
      width[i] = std::max(width[i], r[i].size());
  }
  std::string out;
  for (const auto& r : rows) {
    std::string line;
    for (std::size_t i = 0; i < r.size(); ++i) {
      line += r[i];
      if (i + 1 < r.size())
        line += std::string(width[i] - r[i].size() + 2, ' ');
    }
    out += line + '\n';
  }
  return out;
}

std::string csv_rows(const Table& rows) {
  std::string out;
  for (const auto& r : rows)
    out += csv_line(r);
  return out;
}

stats::Series column(const std::vector<ExperimentRecord>& records, const std::function<double(const ExperimentRecord&)>& f) {
  stats::Series out;
  out.reserve(records.size());
  for (const auto& r : records)
    out.push_back(f(r));
  return out;
}

stats::Series conflicts_of(const std::vector<ExperimentRecord>& records, const std::string& label) {
  return column(records, [&](const ExperimentRecord& r) {
    auto it = r.conflicts.find(label);
    if (it == r.conflicts.end())
      throw std::runtime_error("record " + r.formula_id + " has no conflicts for " + label);
    return it->second;
  });
}

void sort_records(std::vector<ExperimentRecord>& records) {
  std::stable_sort(records.begin(), records.end(),
                   [](const ExperimentRecord& a, const ExperimentRecord& b) { return a.formula_id < b.formula_id; });
}

}  // namespace

std::string to_string(PlanName name) {
  switch (name) {
  case PlanName::Deletion: return "deletion";
  case PlanName::LbdCut: return "lbdcut";
  case PlanName::Restarts: return "restarts";
  case PlanName::Decay: return "decay";
  case PlanName::Hardness: return "hardness";
  }
  return "?";
}

PlanName parse_plan_name(const std::string& text) {
  for (auto n : {PlanName::Deletion, PlanName::LbdCut, PlanName::Restarts, PlanName::Decay, PlanName::Hardness}) {
    if (to_string(n) == text)
      return n;
  }
  throw std::invalid_argument("unknown plan '" + text + "' (deletion|lbdcut|restarts|decay|hardness)");
}

void ExperimentPlan::validate() const {
  config_a.validate();
  config_b.validate();
  if (runs_per_formula < 1)
    throw std::invalid_argument("runs_per_formula must be at least 1");
  if (bootstrap_k < 1)
    throw std::invalid_argument("bootstrap k must be at least 1");
  if (label_a.empty() || label_b.empty() || label_a == label_b)
    throw std::invalid_argument("config labels must be non-empty and distinct");
  if (label_a.find_first_of(",\"\n") != std::string::npos || label_b.find_first_of(",\"\n") != std::string::npos)
    throw std::invalid_argument("config labels may not contain commas, quotes or newlines");

  const bool restart = config_a.restart != config_b.restart;
  const bool deletion = config_a.deletion != config_b.deletion;
  const bool decay = config_a.decay != config_b.decay;
  const bool other = config_a.reduce_interval != config_b.reduce_interval ||
                     config_a.recompute_lbd != config_b.recompute_lbd ||
                     config_a.conflict_budget != config_b.conflict_budget || config_a.seed != config_b.seed;
  bool want_restart = false;
  bool want_deletion = false;
  bool want_decay = false;
  switch (name) {
  case PlanName::Deletion:
  case PlanName::LbdCut: want_deletion = true; break;
  case PlanName::Restarts:
  case PlanName::Hardness: want_restart = true; break;
  case PlanName::Decay: want_decay = true; break;
  }
  if (other || restart != want_restart || deletion != want_deletion || decay != want_decay)
    throw std::invalid_argument("plan " + to_string(name) + ": configs must differ only in the tested dimension");
  if (name == PlanName::LbdCut && (!std::holds_alternative<KeepLbdCutAtMost>(config_a.deletion) ||
                                   !std::holds_alternative<KeepLbdCutAtMost>(config_b.deletion)))
    throw std::invalid_argument("plan lbdcut compares two LBD-cut thresholds");
  if (name == PlanName::Deletion && config_a.deletion.index() == config_b.deletion.index())
    throw std::invalid_argument("plan deletion compares an LBD-cut criterion with a size criterion");
  if (name == PlanName::Restarts && config_a.restart.index() == config_b.restart.index())
    throw std::invalid_argument("plan restarts compares Luby with Glucose-style restarts");
}

ExperimentPlan make_plan(PlanName name, const SolverConfig& base) {
  ExperimentPlan p;
  p.name = name;
  p.config_a = base;
  p.config_b = base;
  switch (name) {
  case PlanName::Deletion:
    p.config_a.deletion = KeepLbdCutAtMost{5};
    p.config_b.deletion = KeepSizeAtMost{12};
    break;
  case PlanName::LbdCut:
    p.config_a.deletion = KeepLbdCutAtMost{1};
    p.config_b.deletion = KeepLbdCutAtMost{5};
    break;
  case PlanName::Restarts:
    p.config_a.restart = LubyRestart{100};
    p.config_b.restart = GlucoseRestart{50, 0.8};
    break;
  case PlanName::Decay:
    p.config_a.decay = 0.6;
    p.config_b.decay = 0.95;
    break;
  case PlanName::Hardness:
    p.config_b.restart = LubyRestart{100};
    if (p.config_a.restart == p.config_b.restart)
      p.config_b.restart = GlucoseRestart{50, 0.8};
    break;
  }
  if (name == PlanName::Decay) {
    p.label_a = decay_label(p.config_a.decay);
    p.label_b = decay_label(p.config_b.decay);
  } else if (name == PlanName::Deletion || name == PlanName::LbdCut) {
    p.label_a = to_string(p.config_a.deletion);
    p.label_b = to_string(p.config_b.deletion);
  } else {
    p.label_a = to_string(p.config_a.restart);
    p.label_b = to_string(p.config_b.restart);
  }
  return p;
}

std::string to_json_line(const ExperimentRecord& r) {
  json j;
  j["formula_id"] = r.formula_id;
  j["file"] = r.file;
  j["entropy"] = r.entropy;
  j["density"] = r.density;
  j["backbone"] = r.backbone;
  j["conflicts"] = r.conflicts;
  j["runs"] = r.runs;
  j["seed"] = r.seed;
  return j.dump();
}

ExperimentRecord record_from_json_line(const std::string& line) {
  const json j = json::parse(line);
  ExperimentRecord r;
  r.formula_id = j.at("formula_id").get<std::string>();
  r.file = j.at("file").get<std::string>();
  r.entropy = j.at("entropy").get<double>();
  r.density = j.at("density").get<double>();
  r.backbone = j.at("backbone").get<std::uint32_t>();
  r.conflicts = j.at("conflicts").get<std::map<std::string, double>>();
  r.runs = j.at("runs").get<std::uint32_t>();
  r.seed = j.at("seed").get<std::uint64_t>();
  return r;
}

ProfileCache::ProfileCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

CachedProfile ProfileCache::get(const CnfFormula& formula) {
  const auto path = dir_ / (content_hash(formula) + ".json");
  if (std::filesystem::exists(path)) {
    const json j = json::parse(read_text(path));
    CachedProfile p;
    p.num_vars = j.at("num_vars").get<std::uint32_t>();
    p.num_clauses = j.at("num_clauses").get<std::size_t>();
    p.model_count = j.at("model_count").get<std::string>();
    p.entropy = j.at("entropy").get<double>();
    p.density = j.at("density").get<double>();
    p.backbone_count = j.at("backbone_count").get<std::uint32_t>();
    if (p.num_vars == formula.num_vars() && p.num_clauses == formula.num_clauses())
      return p;
  }
  const auto full = profile_formula(formula);
  CachedProfile p;
  p.num_vars = full.num_vars;
  p.num_clauses = full.num_clauses;
  p.model_count = full.model_count.get_str();
  p.entropy = full.entropy;
  p.density = full.density;
  p.backbone_count = full.backbone_count;
  json j;
  j["num_vars"] = p.num_vars;
  j["num_clauses"] = p.num_clauses;
  j["model_count"] = p.model_count;
  j["entropy"] = p.entropy;
  j["density"] = p.density;
  j["backbone_count"] = p.backbone_count;
  // Write then rename so concurrent readers never see a partial file.
  auto tmp = path;
  tmp += ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
  write_text(tmp, j.dump() + "\n");
  std::filesystem::rename(tmp, path);
  return p;
}

std::filesystem::path default_cache_dir(const std::filesystem::path& out_dir) {
  if (const char* env = std::getenv("SATENTROPY_CACHE_DIR"); env != nullptr && *env != '\0')
    return env;
  return out_dir / "profile_cache";
}

std::vector<SuiteEntry> list_suite(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    throw std::runtime_error("suite directory " + dir.string() + " does not exist");
  std::vector<SuiteEntry> out;
  const auto manifest = dir / "manifest.csv";
  if (std::filesystem::exists(manifest)) {
    for (const auto& row : read_manifest(manifest))
      out.push_back({row.file, dir / row.file, row.entropy, row.density});
    return out;
  }
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".cnf")
      out.push_back({entry.path().filename().string(), entry.path(), std::nullopt, std::nullopt});
  }
  std::sort(out.begin(), out.end(), [](const SuiteEntry& a, const SuiteEntry& b) { return a.file < b.file; });
  return out;
}

std::uint64_t run_seed(std::uint64_t plan_seed, const std::string& formula_id, std::uint32_t run) {
  std::uint64_t id = 0;
  for (char c : formula_id)
    id = id * 131 + static_cast<unsigned char>(c);
  return derive_seed(derive_seed(plan_seed, id), run);
}

void write_plan(const ExperimentPlan& plan, const std::filesystem::path& path) {
  write_text(path, plan_to_json(plan).dump(2) + "\n");
}

ExperimentPlan read_plan(const std::filesystem::path& path) {
  const json j = json::parse(read_text(path));
  ExperimentPlan p;
  p.name = parse_plan_name(j.at("plan").get<std::string>());
  p.label_a = j.at("label_a").get<std::string>();
  p.label_b = j.at("label_b").get<std::string>();
  p.config_a = config_from_json(j.at("config_a"));
  p.config_b = config_from_json(j.at("config_b"));
  p.runs_per_formula = j.at("runs_per_formula").get<std::uint32_t>();
  p.seed = j.at("seed").get<std::uint64_t>();
  p.bootstrap_k = j.at("bootstrap_k").get<std::size_t>();
  p.validate();
  return p;
}

namespace {

std::vector<ExperimentRecord> read_records_in_file_order(const std::filesystem::path& jsonl) {
  std::vector<ExperimentRecord> out;
  if (!std::filesystem::exists(jsonl))
    return out;
  std::ifstream in(jsonl);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty())
      continue;
    try {
      out.push_back(record_from_json_line(line));
    } catch (const std::exception& e) {
      throw std::runtime_error(jsonl.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

struct Outcome {
  bool skipped = false;
  std::optional<ExperimentRecord> record;
  std::exception_ptr error;
};

bool decided(const SolveStats& s) { return s.status != SolveStatus::BudgetExhausted; }

ExperimentRecord run_formula(const ExperimentPlan& plan, const SuiteEntry& entry, const CnfFormula& formula,
                             const std::string& id, ProfileCache& cache) {
  CachedProfile profile;
  try {
    profile = cache.get(formula);
  } catch (const UnsatisfiableFormula&) {
    throw std::runtime_error(entry.file + ": formula is unsatisfiable; entropy is undefined");
  }
  if (entry.manifest_entropy && std::abs(*entry.manifest_entropy - profile.entropy) > 1e-9)
    throw std::runtime_error(entry.file + ": manifest entropy disagrees with the computed profile");
  if (entry.manifest_density && std::abs(*entry.manifest_density - profile.density) > 1e-9)
    throw std::runtime_error(entry.file + ": manifest density disagrees with the computed profile");

  ExperimentRecord r;
  r.formula_id = id;
  r.file = entry.file;
  r.entropy = profile.entropy;
  r.density = profile.density;
  r.backbone = profile.backbone_count;
  r.runs = plan.runs_per_formula;
  r.seed = plan.seed;
  double sum_a = 0;
  double sum_b = 0;
  for (std::uint32_t run = 0; run < plan.runs_per_formula; ++run) {
    SolverConfig a = plan.config_a;
    SolverConfig b = plan.config_b;
    a.seed = b.seed = run_seed(plan.seed, id, run);
    const auto sa = solve(formula, a);
    const auto sb = solve(formula, b);
    if (decided(sa) && decided(sb) && sa.status != sb.status)
      throw std::runtime_error(entry.file + ": solver verdicts disagree between " + plan.label_a + " and " +
                               plan.label_b + " (seed " + std::to_string(a.seed) + ")");
    if (sa.status == SolveStatus::Unsat || sb.status == SolveStatus::Unsat)
      throw std::runtime_error(entry.file + ": solver reports UNSAT for a formula with models");
    sum_a += static_cast<double>(sa.conflicts);
    sum_b += static_cast<double>(sb.conflicts);
  }
  r.conflicts[plan.label_a] = sum_a / plan.runs_per_formula;
  r.conflicts[plan.label_b] = sum_b / plan.runs_per_formula;
  return r;
}

}  // namespace

std::vector<ExperimentRecord> run_experiment(const ExperimentPlan& plan, const std::filesystem::path& suite_dir,
                                             const std::filesystem::path& out_dir, const RunOptions& options) {
  plan.validate();
  const auto entries = list_suite(suite_dir);
  if (entries.empty())
    throw std::runtime_error("suite " + suite_dir.string() + " contains no formulas");
  auto log = [&](const std::string& msg) {
    if (options.log)
      options.log(msg);
  };

  std::filesystem::create_directories(out_dir);
  const auto plan_path = out_dir / "plan.json";
  const std::string plan_text = plan_to_json(plan).dump(2) + "\n";
  if (std::filesystem::exists(plan_path)) {
    if (read_text(plan_path) != plan_text)
      throw std::runtime_error(out_dir.string() + " holds results of a different plan");
  } else {
    write_text(plan_path, plan_text);
  }

  const auto records_path = out_dir / "records.jsonl";
  std::set<std::string> done;
  for (const auto& r : read_records_in_file_order(records_path))
    done.insert(r.formula_id);
  if (!done.empty())
    log("resuming: " + std::to_string(done.size()) + " records already present");

  ProfileCache cache(options.cache_dir ? *options.cache_dir : default_cache_dir(out_dir));
  std::ofstream out(records_path, std::ios::app | std::ios::binary);
  if (!out)
    throw std::runtime_error("cannot append to " + records_path.string());

  std::vector<Outcome> outcomes(entries.size());
  std::vector<bool> finished(entries.size(), false);
  std::mutex mu;
  std::size_t flushed = 0;
  std::set<std::string> seen = done;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};

  // Writes the finished prefix in suite order so the file does not depend on scheduling.
  auto flush_prefix = [&] {
    while (flushed < entries.size() && finished[flushed]) {
      auto& o = outcomes[flushed];
      if (o.record) {
        if (!seen.insert(o.record->formula_id).second) {
          log(entries[flushed].file + ": duplicate of an earlier formula, skipped");
        } else {
          out << to_json_line(*o.record) << '\n';
          out.flush();
        }
      }
      ++flushed;
    }
  };

  auto worker = [&] {
    for (std::size_t i = next++; i < entries.size() && !failed; i = next++) {
      Outcome o;
      try {
        const auto formula = read_dimacs_file(entries[i].path);
        const auto id = content_hash(formula);
        if (done.count(id) != 0) {
          o.skipped = true;
        } else {
          o.record = run_formula(plan, entries[i], formula, id, cache);
        }
      } catch (...) {
        o.error = std::current_exception();
        failed = true;
      }
      std::lock_guard<std::mutex> lock(mu);
      outcomes[i] = std::move(o);
      finished[i] = true;
      if (!outcomes[i].error)
        flush_prefix();
    }
  };

  const unsigned jobs = std::max(1U, options.jobs);
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < jobs; ++t)
    pool.emplace_back(worker);
  worker();
  for (auto& t : pool)
    t.join();

  for (const auto& o : outcomes) {
    if (o.error)
      std::rethrow_exception(o.error);
  }
  if (flushed != entries.size())
    throw std::runtime_error("experiment stopped before all formulas finished");
  out.close();
  log("records: " + records_path.string());
  return read_records(records_path);
}

std::vector<ExperimentRecord> read_records(const std::filesystem::path& jsonl) {
  auto records = read_records_in_file_order(jsonl);
  sort_records(records);
  return records;
}

std::string to_string(Measure measure) { return measure == Measure::Entropy ? "Entropy" : "Density"; }

double measure_of(const ExperimentRecord& record, Measure measure) {
  return measure == Measure::Entropy ? record.entropy : record.density;
}

stats::RegressionResult hardness_regression(const std::vector<ExperimentRecord>& records, Measure measure,
                                            const std::string& label) {
  if (records.size() < 30)
    throw stats::StatsError("hardness regression needs at least 30 records, got " + std::to_string(records.size()));
  const auto x = column(records, [&](const ExperimentRecord& r) { return measure_of(r, measure); });
  const auto y = conflicts_of(records, label);
  return stats::delta_test(x, y, stats::Series(y.size(), 0.0), stats::Scaling::Both);
}

double hardness_slope_raw(const std::vector<ExperimentRecord>& records, Measure measure, const std::string& label) {
  const auto fit = hardness_regression(records, measure, label);
  const auto x = column(records, [&](const ExperimentRecord& r) { return measure_of(r, measure); });
  const auto y = conflicts_of(records, label);
  return stats::back_transform_slope(fit.beta, stats::std_dev(x), stats::std_dev(y));
}

PlotData aggregate_plot(const std::vector<ExperimentRecord>& records, Measure measure,
                        const std::function<double(const ExperimentRecord&)>& value_fn) {
  PlotData out;
  if (records.empty()) {
    out.trend_note = "no records";
    return out;
  }
  std::map<long long, std::pair<double, std::size_t>> bins;
  stats::Series xs;
  stats::Series ys;
  for (const auto& r : records) {
    const double x = measure_of(r, measure);
    const double y = value_fn(r);
    auto& bin = bins[std::llround(x * 100.0)];
    bin.first += y;
    ++bin.second;
    xs.push_back(x);
    ys.push_back(y);
  }
  for (const auto& [key, bin] : bins)
    out.points.push_back({static_cast<double>(key) / 100.0, bin.first / static_cast<double>(bin.second), bin.second});
  if (records.size() < 3) {
    out.trend_note = "fewer than 3 records";
  } else if (std::all_of(xs.begin(), xs.end(), [&](double v) { return v == xs[0]; })) {
    out.trend_note = "constant " + to_string(measure);
  } else {
    const auto fit = stats::ols(xs, ys);
    out.trend = Trendline{fit.beta, fit.intercept};
  }
  return out;
}

std::string format_p(double p) {
  if (p <= 1e-10)
    return "0";
  if (p < 0.01)
    return fmt("%.2e", p);
  return fmt("%.2f", p);
}

std::string format_interval(const stats::Interval& interval) {
  return "(" + fmt2(interval.lo) + ", " + fmt2(interval.hi) + ")";
}

Table regression_table(const std::vector<ExperimentRecord>& records, const std::string& label_a,
                       const std::string& label_b, std::size_t k, std::uint64_t seed) {
  const auto ca = conflicts_of(records, label_a);
  const auto cb = conflicts_of(records, label_b);
  Table rows{{"measure", "delta_ci", "delta_p", "delta_beta_ci", "delta_beta_p", "delta_beta0_ci", "delta_beta0_p"}};
  std::uint64_t stream = 1;
  for (auto measure : {Measure::Entropy, Measure::Density}) {
    const auto x = column(records, [&](const ExperimentRecord& r) { return measure_of(r, measure); });
    const auto delta = stats::delta_test(x, ca, cb);
    const auto gap = stats::delta_beta_test(x, ca, cb, k, derive_seed(seed, stream++));
    const double delta_p = std::min(delta.p_one_sided, 1.0 - delta.p_one_sided);
    rows.push_back({to_string(measure), format_interval(delta.ci95), format_p(delta_p), format_interval(gap.gap_ci95),
                    format_p(gap.gap_p), format_interval(gap.intercept_gap_ci95), format_p(gap.intercept_gap_p)});
  }
  return rows;
}

Table hardness_table(const std::vector<ExperimentRecord>& records, const std::vector<std::string>& labels,
                     std::size_t k, std::uint64_t seed) {
  const auto entropy = column(records, [](const ExperimentRecord& r) { return r.entropy; });
  const auto density = column(records, [](const ExperimentRecord& r) { return r.density; });
  Table rows{{"config", "beta_e_ci", "beta_s_ci", "gap_ci", "gap_p"}};
  std::uint64_t stream = 10;
  for (const auto& label : labels) {
    const auto gap = stats::beta_gap_entropy_vs_density(entropy, density, conflicts_of(records, label), k,
                                                        derive_seed(seed, stream++));
    rows.push_back({label, format_interval(gap.first.ci95), format_interval(gap.second.ci95),
                    format_interval(gap.gap_ci95), format_p(gap.gap_p)});
  }
  return rows;
}

Table select_columns(const Table& table, const std::vector<std::string>& columns) {
  if (table.empty())
    return {};
  std::vector<std::size_t> pick;
  for (const auto& c : columns) {
    auto it = std::find(table[0].begin(), table[0].end(), c);
    if (it == table[0].end())
      throw std::invalid_argument("no column " + c);
    pick.push_back(static_cast<std::size_t>(it - table[0].begin()));
  }
  Table out;
  for (const auto& row : table) {
    std::vector<std::string> r;
    for (auto i : pick)
      r.push_back(row.at(i));
    out.push_back(std::move(r));
  }
  return out;
}

std::string to_csv(const Table& table) { return csv_rows(table); }
std::string to_aligned_text(const Table& table) { return aligned_rows(table); }

RecordsCsv read_records_csv(const std::filesystem::path& csv) {
  std::ifstream in(csv);
  if (!in)
    throw std::runtime_error("cannot open " + csv.string());
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      const char c = line[i];
      if (quoted) {
        if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
          cell += '"';
          ++i;
        } else if (c == '"') {
          quoted = false;
        } else {
          cell += c;
        }
      } else if (c == '"') {
        quoted = true;
      } else if (c == ',') {
        cells.push_back(cell);
        cell.clear();
      } else {
        cell += c;
      }
    }
    cells.push_back(cell);
    return cells;
  };
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error(csv.string() + ": empty file");
  const auto header = split(trim(line));
  const std::vector<std::string> fixed{"formula_id", "file", "entropy", "density", "backbone"};
  if (header.size() < fixed.size() + 1 || !std::equal(fixed.begin(), fixed.end(), header.begin()))
    throw std::runtime_error(csv.string() + ": expected header formula_id,file,entropy,density,backbone,<configs>");
  RecordsCsv out;
  out.labels.assign(header.begin() + 5, header.end());
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty())
      continue;
    const auto cells = split(line);
    if (cells.size() != header.size())
      throw std::runtime_error(csv.string() + ":" + std::to_string(line_no) + ": expected " +
                               std::to_string(header.size()) + " columns");
    try {
      ExperimentRecord r;
      r.formula_id = cells[0];
      r.file = cells[1];
      r.entropy = std::stod(cells[2]);
      r.density = std::stod(cells[3]);
      r.backbone = static_cast<std::uint32_t>(std::stoul(cells[4]));
      for (std::size_t i = 0; i < out.labels.size(); ++i)
        r.conflicts[out.labels[i]] = std::stod(cells[5 + i]);
      out.records.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw std::runtime_error(csv.string() + ":" + std::to_string(line_no) + ": bad number");
    }
  }
  sort_records(out.records);
  return out;
}

void emit_report(const ExperimentPlan& plan, std::vector<ExperimentRecord> records,
                 const std::filesystem::path& out_dir) {
  if (records.empty())
    throw std::runtime_error("no records to report");
  sort_records(records);
  std::filesystem::create_directories(out_dir);
  const std::vector<std::string> labels{plan.label_a, plan.label_b};
  const auto ca = conflicts_of(records, plan.label_a);
  const auto cb = conflicts_of(records, plan.label_b);
  const auto entropy = column(records, [](const ExperimentRecord& r) { return r.entropy; });
  const auto density = column(records, [](const ExperimentRecord& r) { return r.density; });

  {
    std::string text = csv_line({"formula_id", "file", "entropy", "density", "backbone", plan.label_a, plan.label_b});
    for (std::size_t i = 0; i < records.size(); ++i) {
      const auto& r = records[i];
      text += csv_line({r.formula_id, r.file, fmt_full(r.entropy), fmt_full(r.density), std::to_string(r.backbone),
                        fmt_full(ca[i]), fmt_full(cb[i])});
    }
    write_text(out_dir / "records.csv", text);
  }

  {
    std::string trends = csv_line({"measure", "series", "beta", "intercept", "note"});
    const std::vector<std::pair<std::string, std::function<double(const ExperimentRecord&)>>> series{
        {plan.label_a, [&](const ExperimentRecord& r) { return r.conflicts.at(plan.label_a); }},
        {plan.label_b, [&](const ExperimentRecord& r) { return r.conflicts.at(plan.label_b); }},
        {"delta", [&](const ExperimentRecord& r) { return r.conflicts.at(plan.label_a) - r.conflicts.at(plan.label_b); }},
    };
    for (auto measure : {Measure::Entropy, Measure::Density}) {
      std::string text = csv_line({"series", "x", "y", "count"});
      for (const auto& [name, fn] : series) {
        const auto plot = aggregate_plot(records, measure, fn);
        for (const auto& p : plot.points)
          text += csv_line({name, fmt("%.2f", p.x), fmt_full(p.y), std::to_string(p.count)});
        if (plot.trend) {
          trends += csv_line({to_string(measure), name, fmt_full(plot.trend->beta), fmt_full(plot.trend->intercept), ""});
        } else {
          trends += csv_line({to_string(measure), name, "", "", plot.trend_note});
        }
      }
      const std::string file = measure == Measure::Entropy ? "plot_entropy.csv" : "plot_density.csv";
      write_text(out_dir / file, text);
    }
    write_text(out_dir / "trendlines.csv", trends);
  }

  const auto regression = regression_table(records, plan.label_a, plan.label_b, plan.bootstrap_k, plan.seed);
  write_text(out_dir / "table_regression.csv", to_csv(regression));
  write_text(out_dir / "table_regression.txt", to_aligned_text(regression));
  const auto hardness = hardness_table(records, labels, plan.bootstrap_k, plan.seed);
  write_text(out_dir / "table_hardness.csv", to_csv(hardness));
  write_text(out_dir / "table_hardness.txt", to_aligned_text(hardness));

  json summary;
  summary["plan"] = to_string(plan.name);
  summary["labels"] = labels;
  summary["records"] = records.size();
  summary["runs_per_formula"] = plan.runs_per_formula;
  summary["seed"] = plan.seed;
  summary["bootstrap_k"] = plan.bootstrap_k;
  for (const auto& label : labels) {
    json h;
    for (auto measure : {Measure::Entropy, Measure::Density}) {
      json m;
      if (records.size() >= 30) {
        const auto fit = hardness_regression(records, measure, label);
        m["beta"] = fit.beta;
        m["ci95"] = {fit.ci95.lo, fit.ci95.hi};
        m["p_two_sided"] = fit.p_two_sided;
        m["beta_raw"] = hardness_slope_raw(records, measure, label);
      } else {
        m["note"] = "fewer than 30 records";
      }
      h[to_string(measure)] = m;
    }
    summary["hardness"][label] = h;
  }

  {
    json cross;
    const auto fit = stats::ols(entropy, density);
    cross["beta"] = fit.beta;
    cross["intercept"] = fit.intercept;
    cross["ci95"] = {fit.ci95.lo, fit.ci95.hi};
    cross["p_two_sided"] = fit.p_two_sided;
    cross["correlation"] = stats::correlation(entropy, density);
    summary["entropy_density_regression"] = cross;
  }
  write_text(out_dir / "summary.json", summary.dump(2) + "\n");
}

std::map<std::string, std::string> parse_key_values(std::istream& in) {
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    line = trim(line);
    if (line.empty())
      continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
    const auto key = trim(line.substr(0, eq));
    if (key.empty())
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": empty key");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

std::map<std::string, std::string> apply_solver_settings(SolverConfig& config,
                                                         const std::map<std::string, std::string>& settings) {
  std::map<std::string, std::string> rest;
  for (const auto& [key, value] : settings) {
    try {
      if (key == "restart") {
        config.restart = parse_restart(value);
      } else if (key == "keep") {
        config.deletion = parse_deletion(value);
      } else if (key == "decay") {
        config.decay = std::stod(value);
      } else if (key == "reduce_interval") {
        config.reduce_interval = static_cast<std::uint32_t>(std::stoul(value));
      } else if (key == "recompute_lbd") {
        if (value != "true" && value != "false" && value != "1" && value != "0")
          throw std::invalid_argument("expected true or false");
        config.recompute_lbd = value == "true" || value == "1";
      } else if (key == "conflict_budget") {
        config.conflict_budget = std::stoull(value);
      } else if (key == "seed") {
        config.seed = std::stoull(value);
      } else {
        rest[key] = value;
      }
    } catch (const std::exception& e) {
      throw std::invalid_argument("setting " + key + " = " + value + ": " + e.what());
    }
  }
  config.validate();
  return rest;
}

}  // namespace satentropy
