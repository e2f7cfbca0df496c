#include "satentropy/stats.hpp"

#include "satentropy/seed.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace satentropy::stats {

namespace {

constexpr double kZ95 = 1.96;
constexpr int kMaxRedraws = 1000;

void require_finite(std::span<const double> xs, const char* what) {
  for (double x : xs) {
    if (!std::isfinite(x))
      throw StatsError(std::string(what) + " contains a non-finite value");
  }
}

void require_same_length(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw StatsError("series lengths differ: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
}

struct Line {
  double slope;
  double intercept;
};

// Least-squares line through the indexed points; nullopt when x is constant.
std::optional<Line> fit_line(std::span<const double> xs, std::span<const double> ys, std::span<const std::size_t> idx) {
  const double n = static_cast<double>(idx.size());
  double sx = 0;
  double sy = 0;
  for (auto i : idx) {
    sx += xs[i];
    sy += ys[i];
  }
  const double mx = sx / n;
  const double my = sy / n;
  double sxx = 0;
  double sxy = 0;
  for (auto i : idx) {
    const double dx = xs[i] - mx;
    sxx += dx * dx;
    sxy += dx * (ys[i] - my);
  }
  if (!(sxx > 0))
    return std::nullopt;
  const double slope = sxy / sxx;
  return Line{slope, my - slope * mx};
}

std::vector<BootstrapResult> bootstrap_many(
    std::size_t n, std::size_t k, std::uint64_t seed, std::size_t width,
    const std::function<std::optional<std::vector<double>>(std::span<const std::size_t>)>& statistic) {
  if (n < 2)
    throw StatsError("bootstrap needs at least 2 points");
  if (k < 1)
    throw StatsError("bootstrap needs at least one iteration");
  std::vector<BootstrapResult> out(width);
  for (auto& r : out) {
    r.k = k;
    r.per_iteration.reserve(k);
  }
  std::uint64_t skipped = 0;
  std::uint64_t sampled = 0;
  std::vector<std::size_t> idx(n);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  for (std::size_t it = 0; it < k; ++it) {
    const std::uint64_t iteration_seed = derive_seed(seed, it);
    std::optional<std::vector<double>> value;
    for (int redraw = 0; !value; ++redraw) {
      if (redraw == kMaxRedraws)
        throw StatsError("bootstrap iteration " + std::to_string(it) + " stayed degenerate after " +
                         std::to_string(kMaxRedraws) + " redraws");
      std::mt19937_64 rng(derive_seed(iteration_seed, static_cast<std::uint64_t>(redraw)));
      for (auto& i : idx)
        i = pick(rng);
      sampled += n;
      value = statistic(idx);
      if (!value)
        ++skipped;
    }
    for (std::size_t w = 0; w < width; ++w)
      out[w].per_iteration.push_back((*value)[w]);
  }
  for (auto& r : out) {
    r.degenerate_skipped = skipped;
    r.points_sampled = sampled;
    r.ci95_percentile = {quantile(r.per_iteration, 0.025), quantile(r.per_iteration, 0.975)};
    std::size_t le = 0;
    std::size_t ge = 0;
    for (double v : r.per_iteration) {
      le += v <= 0 ? 1 : 0;
      ge += v >= 0 ? 1 : 0;
    }
    const double frac = static_cast<double>(std::min(le, ge)) / static_cast<double>(k);
    r.p_value = std::min(1.0, 2.0 * frac);
  }
  return out;
}

Series scale_measure(std::span<const double> xs, Scaling scaling) {
  if (scaling == Scaling::None)
    return {xs.begin(), xs.end()};
  return standardize(xs);
}

// z-scores conflicts under Scaling::Both; a constant series stays as is.
Series scale_conflicts(std::span<const double> ys, Scaling scaling) {
  if (scaling != Scaling::Both || ys.size() < 2 || !(std_dev(ys) > 0))
    return {ys.begin(), ys.end()};
  return standardize(ys);
}

BetaGapResult gap_test(std::span<const double> x1, std::span<const double> y1, std::span<const double> x2,
                       std::span<const double> y2, std::size_t k, std::uint64_t seed) {
  BetaGapResult r;
  r.first = ols(x1, y1);
  r.second = ols(x2, y2);
  r.gap = r.first.beta - r.second.beta;
  r.intercept_gap = r.first.intercept - r.second.intercept;
  r.k = k;
  auto stat = [&](std::span<const std::size_t> idx) -> std::optional<std::vector<double>> {
    auto a = fit_line(x1, y1, idx);
    auto b = fit_line(x2, y2, idx);
    if (!a || !b)
      return std::nullopt;
    return std::vector<double>{a->slope - b->slope, a->intercept - b->intercept};
  };
  auto boot = bootstrap_many(x1.size(), k, seed, 2, stat);
  r.gap_ci95 = boot[0].ci95_percentile;
  r.gap_p = boot[0].p_value;
  r.intercept_gap_ci95 = boot[1].ci95_percentile;
  r.intercept_gap_p = boot[1].p_value;
  r.degenerate_skipped = boot[0].degenerate_skipped;
  return r;
}

}  // namespace

double mean(std::span<const double> xs) {
  if (xs.empty())
    throw StatsError("mean of an empty series");
  double s = 0;
  for (double x : xs)
    s += x;
  return s / static_cast<double>(xs.size());
}

double std_dev(std::span<const double> xs, Deviation kind) {
  if (xs.size() < 2)
    throw StatsError("standard deviation needs at least 2 points");
  const double m = mean(xs);
  double ss = 0;
  for (double x : xs)
    ss += (x - m) * (x - m);
  const double denom = static_cast<double>(kind == Deviation::Sample ? xs.size() - 1 : xs.size());
  return std::sqrt(ss / denom);
}

Series standardize(std::span<const double> xs, Deviation kind) {
  require_finite(xs, "series");
  const double sd = std_dev(xs, kind);
  if (!(sd > 0))
    throw StatsError("cannot standardize a series with zero variance");
  const double m = mean(xs);
  Series out;
  out.reserve(xs.size());
  for (double x : xs)
    out.push_back((x - m) / sd);
  return out;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

RegressionResult ols(std::span<const double> xs, std::span<const double> ys, Tail tail) {
  require_same_length(xs, ys);
  if (xs.size() < 3)
    throw StatsError("regression needs at least 3 points, got " + std::to_string(xs.size()));
  require_finite(xs, "x series");
  require_finite(ys, "y series");
  const std::size_t n = xs.size();
  const double mx = mean(xs);
  const double my = mean(ys);
  double sxx = 0;
  double sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (!(sxx > 0))
    throw StatsError("regression on a constant x series");

  RegressionResult r;
  r.n = n;
  r.tail = tail;
  r.beta = sxy / sxx;
  r.intercept = my - r.beta * mx;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = ys[i] - (r.intercept + r.beta * xs[i]);
    r.sse += e * e;
  }
  r.beta_std = std::sqrt(r.sse / static_cast<double>(n - 2) / sxx);
  if (r.beta_std > 0) {
    r.z = r.beta / r.beta_std;
  } else if (r.beta == 0) {
    r.z = 0;
  } else {
    r.z = std::copysign(std::numeric_limits<double>::infinity(), r.beta);
  }
  r.p_two_sided = std::min(1.0, 2.0 * normal_cdf(-std::abs(r.z)));
  r.p_one_sided = tail == Tail::Less ? normal_cdf(r.z) : normal_cdf(-r.z);
  r.ci95 = {r.beta - kZ95 * r.beta_std, r.beta + kZ95 * r.beta_std};
  return r;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty())
    throw StatsError("quantile of an empty sample");
  if (!(q >= 0 && q <= 1))
    throw StatsError("quantile level outside [0,1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

BootstrapResult bootstrap(std::size_t n, std::size_t k, std::uint64_t seed, const ResampleStatistic& statistic) {
  auto wrapped = [&](std::span<const std::size_t> idx) -> std::optional<std::vector<double>> {
    auto v = statistic(idx);
    if (!v)
      return std::nullopt;
    return std::vector<double>{*v};
  };
  return std::move(bootstrap_many(n, k, seed, 1, wrapped)[0]);
}

RegressionResult delta_test(std::span<const double> measure, std::span<const double> conflicts_a,
                            std::span<const double> conflicts_b, Scaling scaling) {
  require_same_length(measure, conflicts_a);
  require_same_length(measure, conflicts_b);
  Series diff(measure.size());
  for (std::size_t i = 0; i < diff.size(); ++i)
    diff[i] = conflicts_a[i] - conflicts_b[i];
  return ols(scale_measure(measure, scaling), scale_conflicts(diff, scaling));
}

BetaGapResult delta_beta_test(std::span<const double> measure, std::span<const double> conflicts_a,
                              std::span<const double> conflicts_b, std::size_t k, std::uint64_t seed,
                              Scaling scaling) {
  require_same_length(measure, conflicts_a);
  require_same_length(measure, conflicts_b);
  const Series x = scale_measure(measure, scaling);
  const Series ya = scale_conflicts(conflicts_a, scaling);
  const Series yb = scale_conflicts(conflicts_b, scaling);
  return gap_test(x, ya, x, yb, k, seed);
}

BetaGapResult beta_gap_entropy_vs_density(std::span<const double> entropy, std::span<const double> density,
                                          std::span<const double> conflicts, std::size_t k, std::uint64_t seed,
                                          Scaling scaling) {
  require_same_length(entropy, density);
  require_same_length(entropy, conflicts);
  const Series xe = scale_measure(entropy, scaling);
  const Series xd = scale_measure(density, scaling);
  const Series y = scale_conflicts(conflicts, scaling);
  return gap_test(xe, y, xd, y, k, seed);
}

double correlation(std::span<const double> xs, std::span<const double> ys) {
  require_same_length(xs, ys);
  const double mx = mean(xs);
  const double my = mean(ys);
  double sxx = 0;
  double syy = 0;
  double sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (!(sxx > 0) || !(syy > 0))
    throw StatsError("correlation with a constant series");
  return sxy / std::sqrt(sxx * syy);
}

double back_transform_slope(double beta, double sd_x, double sd_y) {
  if (!(sd_x > 0))
    throw StatsError("back-transform needs a positive x standard deviation");
  return beta * sd_y / sd_x;
}

}  // namespace satentropy::stats
