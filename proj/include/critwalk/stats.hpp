#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace critwalk {

/// Welford accumulator.
class RunningStats {
 public:
  void add(double x) noexcept;
  std::size_t count() const noexcept { return n_; }
  double mean() const noexcept { return mean_; }
  double variance() const noexcept;  // unbiased; 0 for fewer than 2 samples
  double std_error() const noexcept;

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;  // 0 when fewer than 3 points
  double r_squared = 1.0;
};

/// Ordinary least squares of y on x. Requires at least 2 points with
/// distinct x.
LineFit least_squares(std::span<const double> x, std::span<const double> y);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const noexcept { return lo <= v && v <= hi; }
};

/// Wilson score interval for a binomial proportion at normal quantile z.
Interval wilson_interval(std::size_t successes, std::size_t trials, double z = 1.959963984540054);

/// Linear-interpolation quantile (type 7) of unsorted data.
double quantile(std::vector<double> data, double q);

/// Percentile bootstrap CI of the mean, resampling with a counter-based RNG.
Interval bootstrap_mean_ci(std::span<const double> data, std::uint64_t seed,
                           std::size_t resamples = 1000, double level = 0.95);

/// Percentile bootstrap CI of an arbitrary statistic of resampled data.
template <class Statistic>
Interval bootstrap_ci(std::span<const double> data, Statistic&& stat, std::uint64_t seed,
                      std::size_t resamples = 1000, double level = 0.95);

/// Two-sided normal quantile for the given central coverage (e.g. 0.99).
double normal_quantile_two_sided(double level);

}  // namespace critwalk

#include "critwalk/stats_impl.hpp"
