#pragma once

#include "satentropy/cnf.hpp"
#include "satentropy/entropy.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace satentropy {

struct BenchSpec {
  std::uint32_t num_vars = 20;
  std::uint32_t num_clauses = 85;
  std::uint32_t target_backbone = 0;
  std::uint64_t seed = 0;
  std::uint64_t max_attempts = 100000;
  /// Append unit clauses consistent with a model until the target backbone
  /// is reached. Changes the instance distribution; recorded in manifests.
  bool force = false;

  void validate() const;
};

/// Thrown when rejection sampling runs out of attempts. Carries the
/// histogram backbone size -> number of satisfiable draws observed.
class GenerationFailed : public std::runtime_error {
public:
  GenerationFailed(const std::string& what, std::map<std::uint32_t, std::uint64_t> histogram)
      : std::runtime_error(what), histogram_(std::move(histogram)) {}
  [[nodiscard]] const std::map<std::uint32_t, std::uint64_t>& histogram() const { return histogram_; }

private:
  std::map<std::uint32_t, std::uint64_t> histogram_;
};

/// `num_clauses` clauses over 3 distinct uniformly drawn variables with
/// uniform signs. Deterministic in `seed`.
CnfFormula gen_random_3sat(std::uint32_t num_vars, std::uint32_t num_clauses, std::uint64_t seed);

/// Seed of attempt `attempt` derived from a base seed.
std::uint64_t attempt_seed(std::uint64_t base_seed, std::uint64_t attempt);

struct GeneratedInstance {
  CnfFormula formula;
  FormulaProfile profile;
  std::uint64_t seed = 0;  // seed passed to gen_random_3sat
  std::uint64_t attempt = 0;
  std::uint32_t forced_units = 0;
};

/// Rejection sampling: draws until a satisfiable instance whose backbone has
/// exactly `target_backbone` variables comes up.
GeneratedInstance gen_with_backbone(const BenchSpec& spec);

struct ManifestRow {
  std::string file;
  std::uint64_t seed = 0;
  std::uint32_t target_backbone = 0;
  std::uint32_t backbone = 0;
  double entropy = 0;
  double density = 0;
  std::string formula_id;
  std::uint32_t forced_units = 0;
};

struct Suite {
  std::vector<GeneratedInstance> instances;
  std::vector<ManifestRow> manifest;
};

/// Fills `per_bucket` instances for each target backbone from one shared
/// stream of draws (attempt i uses attempt_seed(base.seed, i)); a draw goes
/// to the bucket matching its backbone while that bucket still has room.
/// `jobs` threads profile draws; the result does not depend on it.
Suite build_suite(const std::vector<std::uint32_t>& backbones, std::uint32_t per_bucket, const BenchSpec& base,
                  unsigned jobs = 1);

/// Writes `<dir>/<bucket>_<index>.cnf` files plus `<dir>/manifest.csv`.
void write_suite(const Suite& suite, const std::filesystem::path& dir);

std::vector<ManifestRow> read_manifest(const std::filesystem::path& csv);

}  // namespace satentropy
