#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace tokgossip::stats {

double mean(std::span<const double> xs);
/// Unbiased sample variance; 0 for fewer than two samples.
double variance(std::span<const double> xs);
/// Classical standard error of the mean, sqrt(var / n).
double standard_error(std::span<const double> xs);

/// Bootstrap standard error of the mean from `resamples` seeded resamples.
double bootstrap_standard_error(std::span<const double> xs, std::size_t resamples,
                                std::uint64_t seed);

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

/// Wilson score interval for a binomial proportion at normal quantile z.
Interval wilson_interval(std::size_t successes, std::size_t trials, double z = 1.96);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value.
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Ordinary least squares y = slope * x + intercept.
LinearFit least_squares(std::span<const double> x, std::span<const double> y);

}  // namespace tokgossip::stats
