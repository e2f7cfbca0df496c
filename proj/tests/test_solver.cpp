#include "satentropy/solver.hpp"

#include "satentropy/counter.hpp"
#include "test_support.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace satentropy;

namespace {

// Recursive definition: u(i) = 2^(k-1) if i = 2^k - 1, otherwise
// u(i - 2^(k-1) + 1) where 2^(k-1) <= i < 2^k - 1.
std::uint64_t luby_oracle(std::uint64_t i) {
  for (std::uint64_t k = 1;; ++k) {
    const std::uint64_t full = (std::uint64_t{1} << k) - 1;
    if (i == full)
      return std::uint64_t{1} << (k - 1);
    if ((std::uint64_t{1} << (k - 1)) <= i && i < full)
      return luby_oracle(i - (std::uint64_t{1} << (k - 1)) + 1);
  }
}

std::vector<SolverConfig> all_eight_configs() {
  std::vector<SolverConfig> out;
  for (RestartPolicy r : {RestartPolicy{LubyRestart{100}}, RestartPolicy{GlucoseRestart{50, 0.8}}})
    for (DeletionCriterion d : {DeletionCriterion{KeepLbdCutAtMost{5}}, DeletionCriterion{KeepSizeAtMost{12}}})
      for (double decay : {0.95, 0.6}) {
        SolverConfig c;
        c.restart = r;
        c.deletion = d;
        c.decay = decay;
        c.reduce_interval = 20;  // force reductions on these small instances
        out.push_back(c);
      }
  return out;
}

}  // namespace

TEST_CASE("luby sequence") {
  const std::uint64_t first[] = {1, 1, 2, 1, 1, 2, 4, 1, 1};
  for (std::uint64_t i = 1; i <= 9; ++i)
    CHECK(luby(i) == first[i - 1]);
  CHECK(luby(15) == 8);
  for (std::uint64_t i = 1; i <= 1023; ++i)
    REQUIRE(luby(i) == luby_oracle(i));
  for (std::uint64_t k = 1; k < 20; ++k)
    CHECK(luby((std::uint64_t{1} << (k + 1)) - 1) == 2 * luby((std::uint64_t{1} << k) - 1));
  CHECK_THROWS_AS(luby(0), std::invalid_argument);
}

TEST_CASE("compute_lbd") {
  const std::vector<int> levels = {2, 2, 5, 7, 3, -1};
  const std::vector<Lit> c = {Lit::from_dimacs(1), Lit::from_dimacs(-2), Lit::from_dimacs(3), Lit::from_dimacs(4)};
  CHECK(compute_lbd(c, levels) == 3);
  const std::vector<Lit> same = {Lit::from_dimacs(1), Lit::from_dimacs(2)};
  CHECK(compute_lbd(same, levels) == 1);
  const std::vector<Lit> distinct = {Lit::from_dimacs(1), Lit::from_dimacs(3), Lit::from_dimacs(4),
                                     Lit::from_dimacs(5)};
  CHECK(compute_lbd(distinct, levels) == 4);
  const std::vector<Lit> unassigned = {Lit::from_dimacs(6)};
  CHECK_THROWS_AS(compute_lbd(unassigned, levels), std::invalid_argument);
}

TEST_CASE("glucose restart trigger") {
  const std::vector<std::uint32_t> fives(50, 5);
  CHECK(glucose_restart_due(fives, 50, 3.0, 0.8));
  CHECK_FALSE(glucose_restart_due(fives, 50, 5.0, 0.8));
  CHECK_FALSE(glucose_restart_due(std::vector<std::uint32_t>(49, 9), 50, 1.0, 0.8));
  // only the most recent window counts
  std::vector<std::uint32_t> mixed(10, 100);
  mixed.insert(mixed.end(), 50, 1);
  CHECK_FALSE(glucose_restart_due(mixed, 50, 3.0, 0.8));
}

TEST_CASE("reduce_database") {
  SECTION("LBD-cut criterion keeps low-LBD clauses unconditionally") {
    std::vector<LearnedClauseMeta> learned(4);
    learned[0].lbd_cut = 3;
    learned[0].size = 30;
    learned[0].activity = 0.0;
    for (std::size_t i = 1; i < 4; ++i) {
      learned[i].lbd_cut = 9;
      learned[i].size = 30;
      learned[i].activity = static_cast<double>(i);
    }
    auto part = reduce_database(learned, KeepLbdCutAtMost{5});
    CHECK(std::find(part.kept.begin(), part.kept.end(), 0) != part.kept.end());
    CHECK(part.deleted == std::vector<std::size_t>{1});
  }
  SECTION("size criterion boundary") {
    std::vector<LearnedClauseMeta> learned(4);
    for (std::size_t i = 0; i < 4; ++i) {
      learned[i].lbd_cut = 9;
      learned[i].activity = 0.0;
    }
    learned[0].size = 12;
    learned[1].size = 13;
    learned[2].size = 13;
    learned[3].size = 13;
    learned[3].activity = 5.0;
    auto part = reduce_database(learned, KeepSizeAtMost{12});
    CHECK(std::find(part.kept.begin(), part.kept.end(), 0) != part.kept.end());
    CHECK(part.deleted == std::vector<std::size_t>{1});
  }
  SECTION("locked clauses survive") {
    std::vector<LearnedClauseMeta> learned(2);
    for (auto& m : learned) {
      m.lbd_cut = 20;
      m.size = 20;
      m.locked = true;
    }
    CHECK(reduce_database(learned, KeepSizeAtMost{1}).deleted.empty());
  }
  SECTION("empty database") {
    auto part = reduce_database({}, KeepLbdCutAtMost{5});
    CHECK(part.kept.empty());
    CHECK(part.deleted.empty());
  }
}

TEST_CASE("lbd_cut never increases") {
  std::mt19937_64 rng(1);
  LearnedClauseMeta meta;
  record_lbd(meta, 7);
  CHECK(meta.lbd_cut == 7);
  for (int i = 0; i < 1000; ++i) {
    const auto before = meta.lbd_cut;
    record_lbd(meta, static_cast<std::uint32_t>(rng() % 12 + 1));
    REQUIRE(meta.lbd_cut <= before);
    REQUIRE(meta.lbd_cut <= meta.lbd_current);
    REQUIRE(meta.lbd_cut >= 1);
  }
}

TEST_CASE("VSIDS preserves the order of untouched variables") {
  std::mt19937_64 rng(12);
  for (double decay : {0.95, 0.6}) {
    VsidsActivity act(20, decay);
    for (std::uint32_t v = 0; v < 20; ++v)
      act.set_initial(Var{v}, static_cast<double>(rng() % 1000) * 1e-6);
    for (int conflict = 0; conflict < 2000; ++conflict) {
      std::vector<bool> touched(20, false);
      for (int k = 0; k < 3; ++k) {
        const auto v = static_cast<std::uint32_t>(rng() % 20);
        touched[v] = true;
      }
      std::vector<double> before(20);
      for (std::uint32_t v = 0; v < 20; ++v)
        before[v] = act.activity(Var{v});
      for (std::uint32_t v = 0; v < 20; ++v)
        if (touched[v])
          act.bump(Var{v});
      act.decay();
      for (std::uint32_t a = 0; a < 20; ++a)
        for (std::uint32_t b = 0; b < 20; ++b)
          if (!touched[a] && !touched[b] && before[a] < before[b])
            REQUIRE(act.activity(Var{a}) <= act.activity(Var{b}));
    }
  }
}

TEST_CASE("config parsing and validation") {
  CHECK(std::get<LubyRestart>(parse_restart("luby:100")).base_interval == 100);
  auto g = std::get<GlucoseRestart>(parse_restart("glucose:50:0.8"));
  CHECK(g.window == 50);
  CHECK(g.margin == 0.8);
  CHECK(std::get<KeepLbdCutAtMost>(parse_deletion("lbd:5")).cut == 5);
  CHECK(std::get<KeepSizeAtMost>(parse_deletion("size:12")).size == 12);
  CHECK(to_string(parse_restart("glucose:50:0.8")) == "glucose:50:0.8");
  CHECK_THROWS_AS(parse_restart("geometric:2"), std::invalid_argument);
  CHECK_THROWS_AS(parse_deletion("lbd:x"), std::invalid_argument);

  SolverConfig bad;
  bad.decay = 1.0;
  CHECK_THROWS_AS(solve(CnfFormula(1), bad), std::invalid_argument);
  bad.decay = 0.9;
  bad.deletion = KeepLbdCutAtMost{0};
  CHECK_THROWS_AS(solve(CnfFormula(1), bad), std::invalid_argument);
}

TEST_CASE("solve trivial formulas") {
  auto unsat = solve(CnfFormula(1, {Clause{1}, Clause{-1}}));
  CHECK(unsat.status == SolveStatus::Unsat);
  auto empty = solve(CnfFormula(4));
  CHECK(empty.status == SolveStatus::Sat);
  CHECK(empty.conflicts == 0);
  CHECK(empty.model.is_total());
  CHECK(solve(CnfFormula(2, {Clause{}})).status == SolveStatus::Unsat);
  CHECK(solve(CnfFormula(0)).status == SolveStatus::Sat);
}

TEST_CASE("solver soundness across all eight configurations") {
  const auto configs = all_eight_configs();
  std::mt19937_64 rng(777);
  for (int i = 0; i < 150; ++i) {
    const auto n = static_cast<std::uint32_t>(rng() % 16 + 5);
    auto f = testing::random_3sat(rng, n, static_cast<std::size_t>(n * (3.5 + (rng() % 200) / 100.0)));
    const bool sat = count_models_bruteforce(f) > 0;
    for (auto config : configs) {
      config.seed = rng();
      auto stats = solve(f, config);
      REQUIRE((stats.status == SolveStatus::Sat) == sat);
      if (sat)
        REQUIRE(evaluate(f, stats.model));
    }
  }
}

TEST_CASE("solver on mixed-width formulas with units and tautologies") {
  std::mt19937_64 rng(4242);
  for (int i = 0; i < 300; ++i) {
    const auto n = static_cast<std::uint32_t>(rng() % 12 + 1);
    auto f = testing::random_formula(rng, n, rng() % (4 * n + 1), 1, 4);
    const bool sat = count_models_bruteforce(f) > 0;
    SolverConfig config;
    config.seed = i;
    config.reduce_interval = 3;
    auto stats = solve(f, config);
    REQUIRE((stats.status == SolveStatus::Sat) == sat);
  }
}

TEST_CASE("solver is deterministic for a fixed seed") {
  std::mt19937_64 rng(9);
  auto f = testing::random_3sat(rng, 60, 255);
  SolverConfig config;
  config.seed = 1234;
  config.reduce_interval = 50;
  auto a = solve(f, config);
  auto b = solve(f, config);
  CHECK(a == b);
}

TEST_CASE("harder instances exercise restarts and reductions") {
  std::mt19937_64 rng(31337);
  auto f = testing::random_3sat(rng, 150, 639);
  for (const auto& base : all_eight_configs()) {
    auto config = base;
    config.reduce_interval = 200;
    auto stats = solve(f, config);
    REQUIRE(stats.status != SolveStatus::BudgetExhausted);
    if (stats.status == SolveStatus::Sat)
      REQUIRE(evaluate(f, stats.model));
    CHECK(stats.conflicts > 0);
  }
  SolverConfig luby;
  luby.restart = LubyRestart{10};
  luby.reduce_interval = 50;
  auto stats = solve(f, luby);
  CHECK(stats.restarts > 0);
  CHECK(stats.reductions > 0);
}

TEST_CASE("conflict budget aborts with a distinct status") {
  std::mt19937_64 rng(5);
  auto f = testing::random_3sat(rng, 200, 852);
  SolverConfig config;
  config.conflict_budget = 5;
  auto stats = solve(f, config);
  CHECK(stats.status == SolveStatus::BudgetExhausted);
  CHECK(stats.conflicts == 5);
}
