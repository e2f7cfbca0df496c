#include "satentropy/benchgen.hpp"

#include "satentropy/counter.hpp"
#include "satentropy/solver.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <unistd.h>

using namespace satentropy;
using Catch::Approx;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("satentropy_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("gen_random_3sat shape") {
  auto tiny = gen_random_3sat(3, 1, 17);
  REQUIRE(tiny.num_clauses() == 1);
  std::set<std::uint32_t> vars;
  for (Lit l : tiny.clauses()[0].lits())
    vars.insert(l.var().index);
  CHECK(vars == std::set<std::uint32_t>{0, 1, 2});

  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto f = gen_random_3sat(20, 85, seed);
    CHECK(f.num_vars() == 20);
    CHECK(f.num_clauses() == 85);
    for (const auto& c : f.clauses()) {
      REQUIRE(c.size() == 3);
      CHECK(c.lits()[0].var() != c.lits()[1].var());
      CHECK(c.lits()[0].var() != c.lits()[2].var());
      CHECK(c.lits()[1].var() != c.lits()[2].var());
    }
    CHECK(write_dimacs(f) == write_dimacs(gen_random_3sat(20, 85, seed)));
  }
  CHECK(write_dimacs(gen_random_3sat(20, 85, 1)) != write_dimacs(gen_random_3sat(20, 85, 2)));
  CHECK_THROWS_AS(gen_random_3sat(2, 5, 0), std::invalid_argument);
}

TEST_CASE("random 3-SAT at the desk ratio is mixed") {
  int sat = 0;
  ModelCounter counter;
  for (std::uint64_t seed = 0; seed < 1000; ++seed)
    sat += counter.count(gen_random_3sat(20, 85, attempt_seed(99, seed))) > 0 ? 1 : 0;
  CHECK(sat > 0);
  CHECK(sat < 1000);
}

TEST_CASE("gen_with_backbone") {
  BenchSpec spec;
  spec.num_vars = 20;
  spec.num_clauses = 85;
  spec.seed = 4;

  for (std::uint32_t target : {0U, 5U, 12U}) {
    spec.target_backbone = target;
    auto inst = gen_with_backbone(spec);
    CHECK(inst.profile.backbone_count == target);
    CHECK(inst.forced_units == 0);
    CHECK(inst.seed == attempt_seed(spec.seed, inst.attempt));
    auto reprofiled = profile_formula(inst.formula);
    CHECK(reprofiled.backbone_count == target);
    CHECK(reprofiled.entropy == inst.profile.entropy);
    CHECK(solve(inst.formula).status == SolveStatus::Sat);
    auto again = gen_with_backbone(spec);
    CHECK(write_dimacs(again.formula) == write_dimacs(inst.formula));
  }

  spec.target_backbone = 5;
  auto mid = gen_with_backbone(spec);
  CHECK(mid.profile.entropy > 0);
  CHECK(mid.profile.entropy < 1);
}

TEST_CASE("forced backbone") {
  BenchSpec spec;
  spec.num_vars = 20;
  spec.num_clauses = 85;
  spec.seed = 6;
  spec.target_backbone = 20;
  spec.force = true;
  auto inst = gen_with_backbone(spec);
  CHECK(inst.profile.backbone_count == 20);
  CHECK(inst.profile.model_count == 1);
  CHECK(inst.profile.density == Approx(std::ldexp(1.0, -20)));
  CHECK(inst.profile.entropy == 0);
  CHECK(inst.formula.num_clauses() == 85 + inst.forced_units);
}

TEST_CASE("generation failure carries the histogram") {
  BenchSpec spec;
  spec.num_vars = 20;
  spec.num_clauses = 20;
  spec.target_backbone = 20;
  spec.max_attempts = 40;
  try {
    gen_with_backbone(spec);
    FAIL("expected GenerationFailed");
  } catch (const GenerationFailed& e) {
    std::uint64_t total = 0;
    for (const auto& [bb, count] : e.histogram())
      total += count;
    CHECK(total > 0);
    CHECK(total <= 40);
    CHECK(e.histogram().count(20) == 0);
  }

  spec.target_backbone = 21;
  CHECK_THROWS_AS(gen_with_backbone(spec), std::invalid_argument);
}

TEST_CASE("build_suite") {
  BenchSpec base;
  base.num_vars = 20;
  base.num_clauses = 85;
  base.seed = 12;
  const std::vector<std::uint32_t> buckets{2, 10, 18};

  auto suite = build_suite(buckets, 50, base, 4);
  REQUIRE(suite.instances.size() == 150);
  REQUIRE(suite.manifest.size() == 150);

  std::map<std::uint32_t, std::vector<double>> entropy_by_bucket;
  std::set<std::string> names;
  for (std::size_t i = 0; i < suite.instances.size(); ++i) {
    const auto& row = suite.manifest[i];
    CHECK(row.backbone == row.target_backbone);
    CHECK(row.formula_id == content_hash(suite.instances[i].formula));
    names.insert(row.file);
    entropy_by_bucket[row.target_backbone].push_back(row.entropy);
  }
  CHECK(names.size() == 150);
  auto bucket_mean = [&](std::uint32_t b) {
    const auto& v = entropy_by_bucket[b];
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  CHECK(bucket_mean(2) > bucket_mean(10));
  CHECK(bucket_mean(10) > bucket_mean(18));

  auto serial = build_suite(buckets, 50, base, 1);
  REQUIRE(serial.manifest.size() == 150);
  for (std::size_t i = 0; i < 150; ++i) {
    CHECK(serial.manifest[i].formula_id == suite.manifest[i].formula_id);
    CHECK(serial.manifest[i].file == suite.manifest[i].file);
  }

  auto dir = scratch_dir("suite");
  write_suite(suite, dir);
  std::size_t cnf_files = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    cnf_files += entry.path().extension() == ".cnf" ? 1 : 0;
  CHECK(cnf_files == 150);
  auto rows = read_manifest(dir / "manifest.csv");
  REQUIRE(rows.size() == 150);
  for (std::size_t i = 0; i < 150; i += 15) {
    CHECK(rows[i].file == suite.manifest[i].file);
    CHECK(rows[i].entropy == suite.manifest[i].entropy);
    CHECK(rows[i].density == suite.manifest[i].density);
    auto f = read_dimacs_file(dir / rows[i].file);
    CHECK(content_hash(f) == rows[i].formula_id);
    auto p = profile_formula(f);
    CHECK(p.backbone_count == rows[i].backbone);
    CHECK(p.entropy == Approx(rows[i].entropy).epsilon(1e-15));
    CHECK(solve(f).status == SolveStatus::Sat);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("build_suite with forcing reaches rare buckets") {
  BenchSpec base;
  base.num_vars = 12;
  base.num_clauses = 40;
  base.seed = 3;
  base.force = true;
  base.max_attempts = 2000;
  auto suite = build_suite({0, 11, 12}, 5, base, 2);
  REQUIRE(suite.manifest.size() == 15);
  for (std::size_t i = 0; i < 15; ++i) {
    CHECK(suite.manifest[i].backbone == suite.manifest[i].target_backbone);
    CHECK(profile_formula(suite.instances[i].formula).backbone_count == suite.manifest[i].backbone);
  }

  base.force = false;
  base.max_attempts = 30;
  CHECK_THROWS_AS(build_suite({12}, 50, base, 2), GenerationFailed);
}
