#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace satentropy::stats {

using Series = std::vector<double>;

struct Interval {
  double lo = 0;
  double hi = 0;
};

enum class Deviation { Sample, Population };

/// Which one-sided alternative p_one_sided refers to.
enum class Tail { Less, Greater };

struct RegressionResult {
  double beta = 0;       // slope
  double intercept = 0;  // the fitted line's value at x = 0
  double beta_std = 0;   // standard error of the slope
  double z = 0;          // beta / beta_std
  double p_two_sided = 1;
  double p_one_sided = 0.5;
  Tail tail = Tail::Less;
  Interval ci95;
  double sse = 0;
  std::size_t n = 0;
};

struct BootstrapResult {
  std::size_t k = 0;
  std::vector<double> per_iteration;
  Interval ci95_percentile;
  /// 2 * min(P[stat <= 0], P[stat >= 0]), clamped to [0, 1].
  double p_value = 1;
  std::uint64_t degenerate_skipped = 0;
  std::uint64_t points_sampled = 0;
};

/// Gap between two slopes (and intercepts) estimated on shared resamples.
struct BetaGapResult {
  RegressionResult first;
  RegressionResult second;
  double gap = 0;  // first.beta - second.beta on the full data
  Interval gap_ci95;
  double gap_p = 1;
  double intercept_gap = 0;  // first.intercept - second.intercept
  Interval intercept_gap_ci95;
  double intercept_gap_p = 1;
  std::size_t k = 0;
  std::uint64_t degenerate_skipped = 0;
};

class StatsError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

double mean(std::span<const double> xs);
double std_dev(std::span<const double> xs, Deviation kind = Deviation::Sample);

/// (x - mean) / sd. Throws StatsError for fewer than 2 points or zero variance.
Series standardize(std::span<const double> xs, Deviation kind = Deviation::Sample);

/// Simple least squares y = intercept + beta * x with a normal (z) test on
/// the slope. Throws StatsError on length mismatch, n < 3 or constant xs.
RegressionResult ols(std::span<const double> xs, std::span<const double> ys, Tail tail = Tail::Less);

/// Standard normal CDF.
double normal_cdf(double z);

/// Linear-interpolated empirical quantile, q in [0,1].
double quantile(std::vector<double> values, double q);

/// Statistic evaluated on one resample, given as indices into the data.
/// Returning nullopt marks the resample degenerate; it is redrawn and counted.
using ResampleStatistic = std::function<std::optional<double>(std::span<const std::size_t>)>;

/// k resamples of n indices drawn uniformly with replacement. Iteration i
/// uses its own generator seeded from (seed, i), so the result does not
/// depend on evaluation order.
BootstrapResult bootstrap(std::size_t n, std::size_t k, std::uint64_t seed, const ResampleStatistic& statistic);

/// How delta/delta-beta inputs are scaled before fitting.
enum class Scaling {
  MeasureOnly,  // z-score the measure, keep conflicts in raw units
  Both,         // z-score both sides
  None,
};

/// Regression of (conflicts_a - conflicts_b) on the measure.
RegressionResult delta_test(std::span<const double> measure, std::span<const double> conflicts_a,
                            std::span<const double> conflicts_b, Scaling scaling = Scaling::MeasureOnly);

/// Slopes of conflicts_a and conflicts_b on the same measure and the
/// bootstrap distribution of their difference.
BetaGapResult delta_beta_test(std::span<const double> measure, std::span<const double> conflicts_a,
                              std::span<const double> conflicts_b, std::size_t k, std::uint64_t seed,
                              Scaling scaling = Scaling::MeasureOnly);

/// Slope of conflicts on entropy against slope of conflicts on density,
/// both measures standardized, over shared resamples.
BetaGapResult beta_gap_entropy_vs_density(std::span<const double> entropy, std::span<const double> density,
                                          std::span<const double> conflicts, std::size_t k, std::uint64_t seed,
                                          Scaling scaling = Scaling::MeasureOnly);

/// Pearson correlation coefficient.
double correlation(std::span<const double> xs, std::span<const double> ys);

/// Slope fitted on z-scored data expressed in raw units: beta * sd_y / sd_x.
double back_transform_slope(double beta, double sd_x, double sd_y);

}  // namespace satentropy::stats
