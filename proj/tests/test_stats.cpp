#include "satentropy/stats.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

using namespace satentropy::stats;
using Catch::Approx;

namespace {

Series normal_series(std::mt19937_64& rng, std::size_t n, double mu = 0, double sigma = 1) {
  std::normal_distribution<double> d(mu, sigma);
  Series out(n);
  for (auto& v : out)
    v = d(rng);
  return out;
}

void check_p_values(const RegressionResult& r) {
  CHECK(r.p_two_sided >= 0);
  CHECK(r.p_two_sided <= 1);
  CHECK(r.p_one_sided >= 0);
  CHECK(r.p_one_sided <= 1);
  CHECK(std::abs(r.p_two_sided - 2 * std::min(r.p_one_sided, 1 - r.p_one_sided)) <= 1e-12);
}

}  // namespace

TEST_CASE("standardize") {
  auto z = standardize(Series{1, 2, 3});
  REQUIRE(z.size() == 3);
  CHECK(z[0] == Approx(-1).margin(1e-15));
  CHECK(z[1] == Approx(0).margin(1e-15));
  CHECK(z[2] == Approx(1).margin(1e-15));

  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 50; ++rep) {
    auto xs = normal_series(rng, 2 + rep * 7, 40, 13);
    auto once = standardize(xs);
    CHECK(std::abs(mean(once)) <= 1e-12);
    CHECK(std::abs(std_dev(once) - 1) <= 1e-12);
    auto twice = standardize(once);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      CHECK(std::abs(twice[i] - once[i]) <= 1e-12);
      if (i > 0)
        CHECK((xs[i] < xs[i - 1]) == (once[i] < once[i - 1]));
    }
  }

  CHECK_THROWS_AS(standardize(Series{4, 4, 4}), StatsError);
  CHECK_THROWS_AS(standardize(Series{1}), StatsError);
  CHECK_THROWS_AS(standardize(Series{1, NAN}), StatsError);

  auto pop = standardize(Series{1, 2, 3}, Deviation::Population);
  CHECK(pop[2] == Approx(std::sqrt(1.5)));
}

TEST_CASE("ols examples") {
  auto exact = ols(Series{0, 1, 2}, Series{0, 1, 2});
  CHECK(exact.beta == Approx(1));
  CHECK(exact.intercept == Approx(0).margin(1e-15));
  CHECK(exact.sse == Approx(0).margin(1e-20));

  auto flat = ols(Series{0, 1, 2}, Series{1, 1, 1});
  CHECK(flat.beta == 0);
  CHECK(flat.z == 0);
  CHECK(flat.p_two_sided == 1);
  check_p_values(flat);

  auto r = ols(Series{0, 1, 2, 3}, Series{0, 2, 3, 5});
  CHECK(r.beta == Approx(1.6).epsilon(1e-12));
  CHECK(r.intercept == Approx(0.1).epsilon(1e-12));

  CHECK_THROWS_AS(ols(Series{1, 2, 3}, Series{1, 2}), StatsError);
  CHECK_THROWS_AS(ols(Series{2, 2, 2}, Series{1, 2, 3}), StatsError);
  CHECK_THROWS_AS(ols(Series{1, 2}, Series{1, 2}), StatsError);
}

TEST_CASE("ols matches exact normal equations on fixed datasets") {
  struct Case {
    Series xs, ys;
    double beta, intercept, sse, beta_std;
  };
  // Expected values from exact rational arithmetic.
  const std::vector<Case> cases = {
      {{0, 1, 2, 3}, {0, 2, 3, 5}, 1.6, 0.1, 0.2, 0.1414213562373095},
      {{1, 2, 4, 5, 7}, {2, 1, 7, 6, 11}, 1.5964912280701755, -0.6666666666666666, 7.087719298245614,
       0.3219031332052137},
      {{-3, -1, 0, 2, 6, 7}, {4, 1, 0.5, -2, -7, -9}, -1.2568710359408033, 0.22093023255813954,
       0.6733615221987315, 0.046210344597028316},
      {{0.5, 1.5, 2.5, 3.5}, {1.25, 0.75, 3.5, 2.0}, 0.5, 0.875, 3.0625, 0.5533985905294664},
      {{10, 20, 30, 40, 50, 60, 70}, {100, 180, 310, 390, 520, 580, 700}, 10.035714285714286, -4.285714285714286,
       1339.2857142857142, 0.30929478706587094},
  };
  for (const auto& c : cases) {
    auto r = ols(c.xs, c.ys);
    CHECK(std::abs(r.beta - c.beta) <= 1e-10);
    CHECK(std::abs(r.intercept - c.intercept) <= 1e-10);
    CHECK(std::abs(r.sse - c.sse) <= 1e-10 * std::max(1.0, c.sse));
    CHECK(std::abs(r.beta_std - c.beta_std) <= 1e-10);
    CHECK(std::abs(r.z * r.beta_std - r.beta) <= 1e-12 * std::max(1.0, std::abs(r.beta)));
    CHECK(r.ci95.lo == Approx(r.beta - 1.96 * r.beta_std));
    CHECK(r.ci95.hi == Approx(r.beta + 1.96 * r.beta_std));
    CHECK(r.ci95.lo <= r.beta);
    CHECK(r.beta <= r.ci95.hi);
    CHECK(r.p_two_sided == Approx(2 * normal_cdf(-std::abs(r.z))));
    CHECK(r.p_one_sided == Approx(normal_cdf(r.z)));
    check_p_values(r);
  }
}

TEST_CASE("ols tail selection") {
  Series xs{0, 1, 2, 3, 4};
  Series ys{5, 3.9, 3.2, 1.8, 1.1};
  auto less = ols(xs, ys, Tail::Less);
  auto greater = ols(xs, ys, Tail::Greater);
  CHECK(less.p_one_sided < 0.01);
  CHECK(greater.p_one_sided > 0.99);
  CHECK(less.p_one_sided + greater.p_one_sided == Approx(1));
  CHECK(less.p_two_sided == greater.p_two_sided);
}

TEST_CASE("ols properties") {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 5 + rep;
    auto xs = normal_series(rng, n, 2, 3);
    auto noise = normal_series(rng, n);
    Series ys(n);
    for (std::size_t i = 0; i < n; ++i)
      ys[i] = 0.7 * xs[i] + noise[i];

    auto r = ols(xs, ys);
    check_p_values(r);

    Series shifted = ys;
    for (auto& y : shifted)
      y += 17.5;
    auto s = ols(xs, shifted);
    CHECK(std::abs(s.beta - r.beta) <= 1e-10);
    CHECK(std::abs(s.intercept - (r.intercept + 17.5)) <= 1e-10);

    auto zr = ols(standardize(xs), standardize(ys));
    CHECK(std::abs(zr.beta - correlation(xs, ys)) <= 1e-10);
  }
}

TEST_CASE("normal_cdf") {
  CHECK(normal_cdf(0) == 0.5);
  CHECK(std::abs(normal_cdf(-1.959964) - 0.025) <= 1e-5);
  CHECK(std::abs(normal_cdf(1.0) - 0.8413447460685429) <= 1e-12);
  CHECK(std::abs(normal_cdf(-3.0) - 0.0013498980316300946) <= 1e-15);
  for (double z = -8; z <= 8; z += 0.37)
    CHECK(std::abs(normal_cdf(z) + normal_cdf(-z) - 1) <= 1e-10);
}

TEST_CASE("quantile") {
  CHECK(quantile({3, 1, 2}, 0.5) == 2);
  CHECK(quantile({0, 10}, 0.25) == 2.5);
  CHECK(quantile({4}, 0.9) == 4);
  CHECK_THROWS_AS(quantile({}, 0.5), StatsError);
  CHECK_THROWS_AS(quantile({1, 2}, 1.5), StatsError);
}

TEST_CASE("bootstrap examples") {
  Series data{1, 5, 2, 8, 3};
  auto mean_of = [&](std::span<const std::size_t> idx) -> std::optional<double> {
    double s = 0;
    for (auto i : idx)
      s += data[i];
    return s / static_cast<double>(idx.size());
  };

  auto one = bootstrap(data.size(), 1, 42, mean_of);
  CHECK(one.k == 1);
  CHECK(one.per_iteration.size() == 1);
  CHECK(one.ci95_percentile.lo == one.ci95_percentile.hi);

  Series constant(20, 3.25);
  auto const_mean = [&](std::span<const std::size_t> idx) -> std::optional<double> {
    double s = 0;
    for (auto i : idx)
      s += constant[i];
    return s / static_cast<double>(idx.size());
  };
  auto c = bootstrap(constant.size(), 200, 7, const_mean);
  for (double v : c.per_iteration)
    CHECK(v == 3.25);

  auto a = bootstrap(data.size(), 300, 9, mean_of);
  auto b = bootstrap(data.size(), 300, 9, mean_of);
  CHECK(a.per_iteration == b.per_iteration);
  auto other = bootstrap(data.size(), 300, 10, mean_of);
  CHECK(a.per_iteration != other.per_iteration);
  CHECK(a.ci95_percentile.lo <= a.ci95_percentile.hi);
  CHECK(a.p_value == 0);  // every resampled mean is positive

  CHECK_THROWS_AS(bootstrap(1, 10, 0, mean_of), StatsError);
  CHECK_THROWS_AS(bootstrap(5, 0, 0, mean_of), StatsError);
}

TEST_CASE("bootstrap of a noiseless line returns its slope") {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t n = 4 + rep % 5;
    Series xs(n), ys(n);
    for (std::size_t i = 0; i < n; ++i) {
      xs[i] = static_cast<double>(i);
      ys[i] = 2.5 * xs[i] - 1.0;
    }
    std::uint64_t degenerate_seen = 0;
    auto slope = [&](std::span<const std::size_t> idx) -> std::optional<double> {
      std::vector<double> sx, sy;
      for (auto i : idx) {
        sx.push_back(xs[i]);
        sy.push_back(ys[i]);
      }
      if (std::all_of(sx.begin(), sx.end(), [&](double v) { return v == sx[0]; })) {
        ++degenerate_seen;
        return std::nullopt;
      }
      return ols(sx, sy).beta;
    };
    auto r = bootstrap(n, 200, rng(), slope);
    REQUIRE(r.per_iteration.size() == 200);
    for (double v : r.per_iteration)
      CHECK(v == Approx(2.5).epsilon(1e-12));
    CHECK(r.degenerate_skipped == degenerate_seen);
    CHECK(r.points_sampled == (200 + degenerate_seen) * n);
  }
}

TEST_CASE("bootstrap touches n*k points") {
  auto trivial = [](std::span<const std::size_t> idx) -> std::optional<double> {
    return static_cast<double>(idx[0]);
  };
  auto r = bootstrap(5000, 1000, 1, trivial);
  CHECK(r.points_sampled == 5000000ULL);
  CHECK(r.degenerate_skipped == 0);
}

TEST_CASE("delta_test examples") {
  Series m{0.1, 0.5, 0.3, 0.9, 0.7, 0.2};
  Series c{10, 30, 20, 50, 40, 15};

  auto same = delta_test(m, c, c);
  CHECK(same.beta == 0);
  CHECK(same.sse == 0);
  CHECK(same.p_two_sided == 1);

  Series zm = standardize(m);
  Series b(6, 100.0);
  Series a(6);
  for (std::size_t i = 0; i < 6; ++i)
    a[i] = b[i] + zm[i];
  auto identity = delta_test(zm, a, b);
  CHECK(identity.beta == Approx(1).epsilon(1e-12));
  auto raw = delta_test(m, a, b, Scaling::None);
  CHECK(raw.beta == Approx(1 / std_dev(m)).epsilon(1e-12));
}

TEST_CASE("delta_test ci95 covers a planted slope") {
  std::mt19937_64 rng(2024);
  const int trials = 1000;
  int covered = 0;
  for (int t = 0; t < trials; ++t) {
    const std::size_t n = 100;
    auto x = normal_series(rng, n);
    auto noise = normal_series(rng, n, 0, 1.5);
    auto base = normal_series(rng, n, 50, 5);
    Series a(n);
    for (std::size_t i = 0; i < n; ++i)
      a[i] = base[i] - 2.0 * x[i] + noise[i];
    auto r = delta_test(x, a, base, Scaling::None);
    covered += (r.ci95.lo <= -2.0 && -2.0 <= r.ci95.hi) ? 1 : 0;
  }
  CHECK(covered >= 930);
}

TEST_CASE("delta_beta_test examples") {
  std::mt19937_64 rng(8);
  const std::size_t n = 200;
  auto m = normal_series(rng, n, 0.6, 0.2);
  auto noise = normal_series(rng, n);
  Series c(n);
  for (std::size_t i = 0; i < n; ++i)
    c[i] = 40 - 12 * m[i] + noise[i];

  auto same = delta_beta_test(m, c, c, 500, 1);
  CHECK(same.gap == 0);
  CHECK(same.gap_p == 1);
  CHECK(same.gap_ci95.lo == 0);
  CHECK(same.gap_ci95.hi == 0);

  Series shifted = c;
  for (auto& v : shifted)
    v += 7;
  auto shift = delta_beta_test(m, c, shifted, 500, 1);
  CHECK(std::abs(shift.gap) <= 1e-9);
  CHECK(shift.intercept_gap == Approx(-7).epsilon(1e-9));
  CHECK(shift.intercept_gap_ci95.lo == Approx(-7).epsilon(1e-9));
  CHECK(shift.intercept_gap_ci95.hi == Approx(-7).epsilon(1e-9));
  CHECK(shift.intercept_gap_p == 0);

  auto z = standardize(m);
  auto n1 = normal_series(rng, n, 0, 0.1);
  auto n2 = normal_series(rng, n, 0, 0.1);
  Series up(n), down(n);
  for (std::size_t i = 0; i < n; ++i) {
    up[i] = z[i] + n1[i];
    down[i] = -z[i] + n2[i];
  }
  auto opposite = delta_beta_test(m, up, down, 1000, 3);
  CHECK(opposite.gap == Approx(2).margin(0.05));
  CHECK((opposite.gap_ci95.lo > 0 || opposite.gap_ci95.hi < 0));
  CHECK(opposite.gap_p < 0.01);
  CHECK(opposite.first.beta == Approx(1).margin(0.03));
  CHECK(opposite.second.beta == Approx(-1).margin(0.03));

  auto again = delta_beta_test(m, up, down, 1000, 3);
  CHECK(again.gap_ci95.lo == opposite.gap_ci95.lo);
  CHECK(again.gap_ci95.hi == opposite.gap_ci95.hi);
}

TEST_CASE("beta gap entropy vs density") {
  std::mt19937_64 rng(77);
  const std::size_t n = 150;
  std::uniform_real_distribution<double> unit(0, 1);
  Series e(n), d(n);
  for (std::size_t i = 0; i < n; ++i) {
    e[i] = unit(rng);
    d[i] = unit(rng);
  }

  SECTION("identical measures give a zero gap everywhere") {
    auto c = normal_series(rng, n, 100, 10);
    auto r = beta_gap_entropy_vs_density(e, e, c, 300, 4);
    CHECK(r.gap == 0);
    CHECK(r.gap_ci95.lo == 0);
    CHECK(r.gap_ci95.hi == 0);
    CHECK(r.gap_p == 1);
  }

  SECTION("planted entropy effect") {
    auto noise = normal_series(rng, n, 0, 5);
    Series c(n);
    for (std::size_t i = 0; i < n; ++i)
      c[i] = 300 - 80 * e[i] + noise[i];
    auto r = beta_gap_entropy_vs_density(e, d, c, 1000, 5);
    CHECK(back_transform_slope(r.first.beta, std_dev(e), 1.0) == Approx(-80).margin(3));
    CHECK(r.gap_ci95.hi < 0);
    CHECK(r.gap_p < 0.01);
  }

  SECTION("null calibration") {
    int rejections = 0;
    const int reps = 200;
    for (int rep = 0; rep < reps; ++rep) {
      Series ee(n), dd(n);
      for (std::size_t i = 0; i < n; ++i) {
        ee[i] = unit(rng);
        dd[i] = unit(rng);
      }
      auto c = normal_series(rng, n, 100, 10);
      auto r = beta_gap_entropy_vs_density(ee, dd, c, 400, static_cast<std::uint64_t>(rep));
      CHECK(r.gap_p >= 0);
      CHECK(r.gap_p <= 1);
      rejections += r.gap_p < 0.05 ? 1 : 0;
    }
    CHECK(rejections <= reps / 10);
  }
}

TEST_CASE("scaling modes") {
  Series m{1, 2, 3, 4, 5};
  Series a{10, 14, 21, 24, 33};
  Series b{9, 10, 12, 11, 13};
  auto both = delta_test(m, a, b, Scaling::Both);
  Series diff(5);
  for (int i = 0; i < 5; ++i)
    diff[i] = a[i] - b[i];
  CHECK(both.beta == Approx(correlation(m, diff)).epsilon(1e-12));
  auto measure_only = delta_test(m, a, b);
  auto none = delta_test(m, a, b, Scaling::None);
  CHECK(measure_only.z == Approx(none.z).epsilon(1e-12));
  CHECK(both.z == Approx(none.z).epsilon(1e-12));
  CHECK(measure_only.beta == Approx(none.beta * std_dev(m)).epsilon(1e-12));
}

TEST_CASE("correlation and back-transform") {
  CHECK(correlation(Series{1, 2, 3}, Series{2, 4, 6}) == Approx(1));
  CHECK(correlation(Series{1, 2, 3}, Series{3, 2, 1}) == Approx(-1));
  CHECK_THROWS_AS(correlation(Series{1, 2, 3}, Series{1, 1, 1}), StatsError);
  CHECK(back_transform_slope(-0.5, 2.0, 8.0) == -2.0);
  CHECK_THROWS_AS(back_transform_slope(1, 0, 1), StatsError);
}
