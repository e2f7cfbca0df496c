#pragma once

#include "satentropy/cnf.hpp"
#include "satentropy/entropy.hpp"
#include "satentropy/solver.hpp"
#include "satentropy/stats.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace satentropy {

enum class PlanName { Deletion, LbdCut, Restarts, Decay, Hardness };

std::string to_string(PlanName name);
/// "deletion", "lbdcut", "restarts", "decay" or "hardness".
PlanName parse_plan_name(const std::string& text);

struct ExperimentPlan {
  PlanName name = PlanName::Deletion;
  SolverConfig config_a;
  SolverConfig config_b;
  std::string label_a;
  std::string label_b;
  std::uint32_t runs_per_formula = 5;
  std::uint64_t seed = 0;
  std::size_t bootstrap_k = 1000;

  /// Throws std::invalid_argument unless the two configs differ in the
  /// dimension the plan tests and agree everywhere else.
  void validate() const;
};

/// The standard pair for `name`, built on top of `base`:
///   deletion  lbd:5 vs size:12
///   lbdcut    lbd:1 vs lbd:5
///   restarts  luby:100 vs glucose:50:0.8
///   decay     0.6 vs 0.95
///   hardness  `base` vs `base` with luby:100 restarts
ExperimentPlan make_plan(PlanName name, const SolverConfig& base = {});

struct ExperimentRecord {
  std::string formula_id;
  std::string file;
  double entropy = 0;
  double density = 0;
  std::uint32_t backbone = 0;
  std::map<std::string, double> conflicts;  // label -> mean conflicts over runs
  std::uint32_t runs = 0;
  std::uint64_t seed = 0;

  friend bool operator==(const ExperimentRecord&, const ExperimentRecord&) = default;
};

std::string to_json_line(const ExperimentRecord& record);
ExperimentRecord record_from_json_line(const std::string& line);

struct CachedProfile {
  std::uint32_t num_vars = 0;
  std::size_t num_clauses = 0;
  std::string model_count;
  double entropy = 0;
  double density = 0;
  std::uint32_t backbone_count = 0;
};

/// One JSON file per formula content hash.
class ProfileCache {
public:
  explicit ProfileCache(std::filesystem::path dir);

  /// Cached profile, computing and storing it on a miss. Throws
  /// UnsatisfiableFormula for unsatisfiable formulas.
  CachedProfile get(const CnfFormula& formula);
  [[nodiscard]] const std::filesystem::path& dir() const { return dir_; }

private:
  std::filesystem::path dir_;
};

/// $SATENTROPY_CACHE_DIR if set, else `<out_dir>/profile_cache`.
std::filesystem::path default_cache_dir(const std::filesystem::path& out_dir);

struct SuiteEntry {
  std::string file;  // name relative to the suite directory
  std::filesystem::path path;
  std::optional<double> manifest_entropy;
  std::optional<double> manifest_density;
};

/// Entries in manifest order when `dir/manifest.csv` exists, else every
/// `*.cnf` in the directory sorted by name.
std::vector<SuiteEntry> list_suite(const std::filesystem::path& dir);

struct RunOptions {
  unsigned jobs = 1;
  std::optional<std::filesystem::path> cache_dir;
  std::function<void(const std::string&)> log;
};

/// Seed shared by both configs in run `run` on formula `formula_id`.
std::uint64_t run_seed(std::uint64_t plan_seed, const std::string& formula_id, std::uint32_t run);

/// Solves every suite formula under both configs and appends one record per
/// formula to `<out_dir>/records.jsonl` in suite order. Formulas already in
/// that file are skipped, so an interrupted run resumes. Returns all records
/// sorted by formula_id. Throws when the two configs disagree on a verdict.
std::vector<ExperimentRecord> run_experiment(const ExperimentPlan& plan, const std::filesystem::path& suite_dir,
                                             const std::filesystem::path& out_dir, const RunOptions& options = {});

void write_plan(const ExperimentPlan& plan, const std::filesystem::path& path);
ExperimentPlan read_plan(const std::filesystem::path& path);
/// Records sorted by formula_id.
std::vector<ExperimentRecord> read_records(const std::filesystem::path& jsonl);

enum class Measure { Entropy, Density };
std::string to_string(Measure measure);
double measure_of(const ExperimentRecord& record, Measure measure);

/// z-scored conflicts under `label` against the z-scored measure. A constant
/// conflict series gives a flat fit. Needs at least 30 records.
stats::RegressionResult hardness_regression(const std::vector<ExperimentRecord>& records, Measure measure,
                                            const std::string& label);
/// The same slope in raw units (conflicts per unit of measure).
double hardness_slope_raw(const std::vector<ExperimentRecord>& records, Measure measure, const std::string& label);

struct PlotPoint {
  double x = 0;
  double y = 0;
  std::size_t count = 0;
};

struct Trendline {
  double beta = 0;
  double intercept = 0;
};

struct PlotData {
  std::vector<PlotPoint> points;  // sorted by x
  std::optional<Trendline> trend;
  std::string trend_note;  // why the trendline is missing
};

/// Rounds x to 2 decimals and averages y per rounded x; the trendline is
/// fitted on the raw records.
PlotData aggregate_plot(const std::vector<ExperimentRecord>& records, Measure measure,
                        const std::function<double(const ExperimentRecord&)>& value_fn);

/// p-value cell: "0" at or below 1e-10.
std::string format_p(double p);
/// "(lo, hi)" with 2 decimals.
std::string format_interval(const stats::Interval& interval);

using Table = std::vector<std::vector<std::string>>;  // header row first

/// Rows Entropy and Density with columns measure, delta_ci, delta_p,
/// delta_beta_ci, delta_beta_p, delta_beta0_ci, delta_beta0_p. The delta p
/// is one-sided in the direction of the fitted slope.
Table regression_table(const std::vector<ExperimentRecord>& records, const std::string& label_a,
                       const std::string& label_b, std::size_t k, std::uint64_t seed);

/// One row per label: config, beta_e_ci, beta_s_ci, gap_ci, gap_p.
Table hardness_table(const std::vector<ExperimentRecord>& records, const std::vector<std::string>& labels,
                     std::size_t k, std::uint64_t seed);

/// Keeps the named columns, in that order.
Table select_columns(const Table& table, const std::vector<std::string>& columns);
std::string to_csv(const Table& table);
std::string to_aligned_text(const Table& table);

struct RecordsCsv {
  std::vector<ExperimentRecord> records;
  std::vector<std::string> labels;  // conflict columns after backbone
};

/// Reads a records.csv written by emit_report.
RecordsCsv read_records_csv(const std::filesystem::path& csv);

/// Writes records.csv, plot_entropy.csv, plot_density.csv, trendlines.csv,
/// table_regression.{csv,txt}, table_hardness.{csv,txt} and summary.json.
void emit_report(const ExperimentPlan& plan, std::vector<ExperimentRecord> records,
                 const std::filesystem::path& out_dir);

/// `key = value` lines; `#` starts a comment.
std::map<std::string, std::string> parse_key_values(std::istream& in);

/// Applies restart, keep, decay, reduce_interval, recompute_lbd and
/// conflict_budget keys. Unknown keys are returned untouched.
std::map<std::string, std::string> apply_solver_settings(SolverConfig& config,
                                                         const std::map<std::string, std::string>& settings);

}  // namespace satentropy
