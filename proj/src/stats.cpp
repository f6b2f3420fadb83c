#include "lfs/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "lfs/errors.hpp"

namespace lfs {

void WeightedSamples::add(std::span<const double> theta, double weight) {
  if (theta.size() != dim_) throw ConfigError("sample dimension mismatch");
  values_.insert(values_.end(), theta.begin(), theta.end());
  weights_.push_back(weight);
}

std::vector<double> WeightedSamples::column(std::size_t j) const {
  std::vector<double> col(size());
  for (std::size_t i = 0; i < col.size(); ++i) col[i] = value(i, j);
  return col;
}

std::vector<double> WeightedSamples::normalized_weights() const {
  const double total = std::accumulate(weights_.begin(), weights_.end(), 0.0);
  std::vector<double> w(weights_);
  for (double& x : w) x /= total;
  return w;
}

Moments weighted_moments(const WeightedSamples& samples) {
  const std::size_t d = samples.dim();
  Moments m{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  const auto w = samples.normalized_weights();
  for (std::size_t i = 0; i < samples.size(); ++i)
    for (std::size_t j = 0; j < d; ++j) m.mean[j] += w[i] * samples.value(i, j);
  for (std::size_t i = 0; i < samples.size(); ++i)
    for (std::size_t j = 0; j < d; ++j) {
      const double dev = samples.value(i, j) - m.mean[j];
      m.variance[j] += w[i] * dev * dev;
    }
  return m;
}

double mean(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
  const double m = mean(x);
  double sum = 0.0;
  for (double v : x) sum += (v - m) * (v - m);
  return sum / static_cast<double>(x.size());
}

double sample_sd(std::span<const double> x) {
  const double n = static_cast<double>(x.size());
  return std::sqrt(variance(x) * n / (n - 1.0));
}

double ks_statistic(std::span<const double> values, std::span<const double> weights,
                    const std::function<double(double)>& cdf) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);

  double cumulative = 0.0;
  double d = 0.0;
  for (std::size_t i = 0; i < n;) {
    const double v = values[order[i]];
    const double before = cumulative;
    while (i < n && values[order[i]] == v) cumulative += weights[order[i++]] / total;
    const double f = cdf(v);
    d = std::max({d, std::fabs(before - f), std::fabs(cumulative - f)});
  }
  return d;
}

double ks_statistic(const WeightedSamples& samples,
                    const std::vector<std::function<double(double)>>& marginal_cdfs) {
  if (marginal_cdfs.size() != samples.dim())
    throw ConfigError("need one marginal CDF per parameter dimension");
  double d = 0.0;
  for (std::size_t j = 0; j < samples.dim(); ++j)
    d = std::max(d, ks_statistic(samples.column(j), samples.weights(), marginal_cdfs[j]));
  return d;
}

double kolmogorov_pvalue(double statistic, double n) {
  const double root = std::sqrt(n);
  const double lambda = (root + 0.12 + 0.11 / root) * statistic;
  if (lambda <= 0.0) return 1.0;
  if (lambda < 1.0) {
    // P(K <= lambda) = sqrt(2 pi)/lambda sum_k exp(-(2k-1)^2 pi^2 / (8 lambda^2))
    double sum = 0.0;
    for (int k = 1; k <= 20; ++k) {
      const double a = (2.0 * k - 1.0) * std::numbers::pi;
      sum += std::exp(-a * a / (8.0 * lambda * lambda));
    }
    return std::clamp(1.0 - std::sqrt(2.0 * std::numbers::pi) / lambda * sum, 0.0, 1.0);
  }
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

TestResult ks_test(std::span<const double> values, const std::function<double(double)>& cdf) {
  const std::vector<double> w(values.size(), 1.0);
  const double d = ks_statistic(values, w, cdf);
  return {d, kolmogorov_pvalue(d, static_cast<double>(values.size()))};
}

namespace {

// KS statistic of a labelled pooled sample: sorted values are split into runs
// of ties (run_ends); label 1 marks membership in the first sample.
double labelled_ks(const std::vector<std::size_t>& run_ends, const std::vector<char>& labels,
                   double n_a, double n_b) {
  double count_a = 0.0, count_b = 0.0, d = 0.0;
  std::size_t i = 0;
  for (std::size_t end : run_ends) {
    for (; i < end; ++i) (labels[i] ? count_a : count_b) += 1.0;
    d = std::max(d, std::fabs(count_a / n_a - count_b / n_b));
  }
  return d;
}

} // namespace

double two_sample_ks(std::span<const double> a, std::span<const double> b) {
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double na = static_cast<double>(x.size()), nb = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() || j < y.size()) {
    const double v = j == y.size() || (i < x.size() && x[i] <= y[j]) ? x[i] : y[j];
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

TestResult ks_permutation_test(std::span<const double> a, std::span<const double> b,
                               std::size_t permutations, RandomStream& rng) {
  const std::size_t n = a.size() + b.size();
  std::vector<std::pair<double, char>> pooled;
  pooled.reserve(n);
  for (double v : a) pooled.push_back({v, 1});
  for (double v : b) pooled.push_back({v, 0});
  std::sort(pooled.begin(), pooled.end());

  std::vector<std::size_t> run_ends;
  for (std::size_t i = 1; i <= n; ++i)
    if (i == n || pooled[i].first != pooled[i - 1].first) run_ends.push_back(i);
  std::vector<char> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = pooled[i].second;

  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double observed = labelled_ks(run_ends, labels, na, nb);
  std::size_t at_least = 0;
  for (std::size_t p = 0; p < permutations; ++p) {
    for (std::size_t i = n - 1; i > 0; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i);
      std::swap(labels[i], labels[pick(rng)]);
    }
    if (labelled_ks(run_ends, labels, na, nb) >= observed - 1e-12) ++at_least;
  }
  return {observed, static_cast<double>(at_least + 1) / static_cast<double>(permutations + 1)};
}

double batch_means_se(std::span<const double> series, std::size_t batches) {
  const std::size_t size = series.size() / batches;
  if (size == 0) throw ConfigError("series too short for batch means");
  std::vector<double> means(batches);
  const std::size_t offset = series.size() - size * batches;
  for (std::size_t b = 0; b < batches; ++b)
    means[b] = mean(series.subspan(offset + b * size, size));
  return sample_sd(means) / std::sqrt(static_cast<double>(batches));
}

namespace {

Interval percentile_interval(std::vector<double> stats, double level) {
  std::sort(stats.begin(), stats.end());
  const double tail = (1.0 - level) / 2.0;
  const auto at = [&](double q) {
    const double pos = q * static_cast<double>(stats.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, stats.size() - 1);
    return stats[lo] + (pos - static_cast<double>(lo)) * (stats[hi] - stats[lo]);
  };
  return {at(tail), at(1.0 - tail)};
}

double resampled_mean(std::span<const double> x, RandomStream& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, x.size() - 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) sum += x[pick(rng)];
  return sum / static_cast<double>(x.size());
}

} // namespace

Interval bootstrap_mean_difference(std::span<const double> a, std::span<const double> b,
                                   double level, std::size_t resamples, RandomStream& rng) {
  std::vector<double> stats(resamples);
  for (auto& s : stats) {
    const double ma = resampled_mean(a, rng);
    s = ma - resampled_mean(b, rng);
  }
  return percentile_interval(std::move(stats), level);
}

double least_squares_slope(std::span<const double> x, std::span<const double> y) {
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

Interval bootstrap_slope(std::span<const double> x, const std::vector<std::vector<double>>& groups,
                         double level, std::size_t resamples, RandomStream& rng) {
  std::vector<double> xs, ys, stats(resamples);
  for (auto& s : stats) {
    xs.clear();
    ys.clear();
    for (std::size_t g = 0; g < groups.size(); ++g) {
      std::uniform_int_distribution<std::size_t> pick(0, groups[g].size() - 1);
      for (std::size_t i = 0; i < groups[g].size(); ++i) {
        xs.push_back(x[g]);
        ys.push_back(groups[g][pick(rng)]);
      }
    }
    s = least_squares_slope(xs, ys);
  }
  return percentile_interval(std::move(stats), level);
}

} // namespace lfs
