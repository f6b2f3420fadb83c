#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "lfs/bundle.hpp"
#include "lfs/random.hpp"

namespace lfs {

/// Parameter draws with (not necessarily normalized) nonnegative weights.
class WeightedSamples {
public:
  explicit WeightedSamples(std::size_t dim = 1) : dim_(dim) {}

  void add(std::span<const double> theta, double weight = 1.0);

  std::size_t size() const noexcept { return weights_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  double value(std::size_t i, std::size_t j) const { return values_[i * dim_ + j]; }
  double weight(std::size_t i) const { return weights_[i]; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  std::vector<double> column(std::size_t j) const;
  /// Weights divided by their sum.
  std::vector<double> normalized_weights() const;

private:
  std::size_t dim_;
  std::vector<double> values_;
  std::vector<double> weights_;
};

struct Moments {
  std::vector<double> mean;
  std::vector<double> variance;
};

/// Weighted mean and (biased, 1/sum w) variance per dimension.
Moments weighted_moments(const WeightedSamples& samples);

double mean(std::span<const double> x);
/// Population variance (divides by n).
double variance(std::span<const double> x);
/// Sample standard deviation (divides by n - 1).
double sample_sd(std::span<const double> x);

/// sup_x |F_w(x) - F(x)| for the weighted empirical CDF F_w of 1-D values.
double ks_statistic(std::span<const double> values, std::span<const double> weights,
                    const std::function<double(double)>& cdf);
/// Per-marginal statistics against marginal_cdfs[j]; the maximum is returned.
double ks_statistic(const WeightedSamples& samples,
                    const std::vector<std::function<double(double)>>& marginal_cdfs);

/// Asymptotic Kolmogorov p-value P(D_n >= d) with Stephens' small-n correction.
double kolmogorov_pvalue(double statistic, double n);

/// Two-sample KS statistic sup |F_a - F_b|.
double two_sample_ks(std::span<const double> a, std::span<const double> b);

struct TestResult {
  double statistic;
  double p_value;
};

/// Two-sample KS test with a permutation null distribution.
/// p = (1 + #{D_perm >= D_obs}) / (permutations + 1).
TestResult ks_permutation_test(std::span<const double> a, std::span<const double> b,
                               std::size_t permutations, RandomStream& rng);

/// One-sample KS test of unweighted values against cdf (asymptotic p-value).
TestResult ks_test(std::span<const double> values, const std::function<double(double)>& cdf);

/// Standard error of the mean of a correlated series by non-overlapping batch means.
double batch_means_se(std::span<const double> series, std::size_t batches = 50);

struct Interval {
  double lo;
  double hi;
  bool contains(double x) const { return lo <= x && x <= hi; }
};

/// Percentile bootstrap interval for mean(a) - mean(b).
Interval bootstrap_mean_difference(std::span<const double> a, std::span<const double> b,
                                   double level, std::size_t resamples, RandomStream& rng);

/// Least-squares slope of y on x.
double least_squares_slope(std::span<const double> x, std::span<const double> y);

/// Percentile bootstrap interval for the least-squares slope of y on x, where
/// groups[g] holds the replicate y values observed at x[g]. Each group is
/// resampled with replacement independently.
Interval bootstrap_slope(std::span<const double> x, const std::vector<std::vector<double>>& groups,
                         double level, std::size_t resamples, RandomStream& rng);

} // namespace lfs
