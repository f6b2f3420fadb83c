#include <cmath>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "doctest.h"

#include "lfs/stats.hpp"

namespace {

double std_normal_cdf(double x) { return boost::math::cdf(boost::math::normal_distribution<double>(), x); }

std::vector<double> normal_draws(std::size_t n, lfs::RandomStream& rng, double shift = 0.0) {
  std::vector<double> x(n);
  for (double& v : x) v = rng.normal() + shift;
  return x;
}

} // namespace

TEST_CASE("KS statistic of oracle draws stays below the asymptotic 1% critical value") {
  lfs::RandomStream rng(1);
  const std::size_t n = 10000;
  const std::vector<double> w(n, 1.0);
  int exceed = 0;
  for (int r = 0; r < 100; ++r) {
    const auto x = normal_draws(n, rng);
    if (lfs::ks_statistic(x, w, std_normal_cdf) >= 1.63 / std::sqrt(static_cast<double>(n))) ++exceed;
  }
  // At most one exceedance in 100 replicates.
  CHECK(exceed <= 1);
}

TEST_CASE("KS statistic edge cases") {
  const std::vector<double> point(50, 0.0), ones(50, 1.0);
  CHECK(lfs::ks_statistic(point, ones, std_normal_cdf) >= 0.5);
  // One nonzero weight is a single draw.
  const std::vector<double> values{0.0, 3.0, -2.0}, single{1.0, 0.0, 0.0};
  CHECK(lfs::ks_statistic(values, single, std_normal_cdf) == doctest::Approx(0.5));
  // Exact value for a two-point sample.
  const std::vector<double> two{-1.0, 1.0}, equal{1.0, 1.0};
  const double F = std_normal_cdf(1.0);
  CHECK(lfs::ks_statistic(two, equal, std_normal_cdf) == doctest::Approx(std::max(F - 0.5, 1.0 - F)));
  // Weights shift the empirical CDF.
  const std::vector<double> skew{3.0, 1.0};
  CHECK(lfs::ks_statistic(two, skew, std_normal_cdf) ==
        doctest::Approx(std::max({0.75 - (1.0 - F), F - 0.75, 1.0 - F})));
}

TEST_CASE("multivariate KS reports the worst marginal") {
  lfs::WeightedSamples s(2);
  lfs::RandomStream rng(2);
  for (int i = 0; i < 2000; ++i) {
    const double a = rng.normal(), b = rng.normal() + 1.0;
    const double row[] = {a, b};
    s.add(row);
  }
  const double d0 = lfs::ks_statistic(s.column(0), s.weights(), std_normal_cdf);
  const double d1 = lfs::ks_statistic(s.column(1), s.weights(), std_normal_cdf);
  CHECK(lfs::ks_statistic(s, {std_normal_cdf, std_normal_cdf}) == std::max(d0, d1));
  CHECK(d1 > 0.3);
}

TEST_CASE("Kolmogorov p-values") {
  const double big = 1e8;
  CHECK(lfs::kolmogorov_pvalue(1.36 / std::sqrt(big), big) == doctest::Approx(0.0494).epsilon(0.01));
  CHECK(lfs::kolmogorov_pvalue(1.63 / std::sqrt(big), big) == doctest::Approx(0.0098).epsilon(0.02));
  CHECK(lfs::kolmogorov_pvalue(1.0 / std::sqrt(big), big) == doctest::Approx(0.2700).epsilon(0.01));
  CHECK(lfs::kolmogorov_pvalue(0.5 / std::sqrt(big), big) == doctest::Approx(0.9639).epsilon(0.01));
  CHECK(lfs::kolmogorov_pvalue(0.0, 100) == 1.0);
  // Continuous across the series switch at lambda = 1.
  const double n = 400;
  const double at = 1.0 / (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n));
  CHECK(lfs::kolmogorov_pvalue(at * (1 - 1e-9), n) == doctest::Approx(lfs::kolmogorov_pvalue(at * (1 + 1e-9), n)));
}

TEST_CASE("weighted moments") {
  lfs::WeightedSamples s(1);
  s.add(std::vector<double>{-1.0});
  s.add(std::vector<double>{1.0});
  auto m = lfs::weighted_moments(s);
  CHECK(m.mean[0] == 0.0);
  CHECK(m.variance[0] == 1.0);

  lfs::WeightedSamples t(1);
  t.add(std::vector<double>{2.5}, 1.0);
  t.add(std::vector<double>{7.0}, 0.0);
  m = lfs::weighted_moments(t);
  CHECK(m.mean[0] == 2.5);
  CHECK(m.variance[0] == 0.0);

  lfs::RandomStream rng(3);
  lfs::WeightedSamples big(1);
  for (double x : normal_draws(1000000, rng)) big.add(std::vector<double>{x});
  CHECK(std::abs(lfs::weighted_moments(big).variance[0] - 1.0) < 0.005);
  CHECK(big.normalized_weights()[0] == doctest::Approx(1e-6));
}

TEST_CASE("basic sample statistics") {
  const std::vector<double> x{1.0, 2.0, 3.0, 4.0};
  CHECK(lfs::mean(x) == 2.5);
  CHECK(lfs::variance(x) == 1.25);
  CHECK(lfs::sample_sd(x) == doctest::Approx(std::sqrt(5.0 / 3.0)));
  const std::vector<double> a{1.0, 2.0, 3.0}, b{4.0, 5.0, 6.0};
  CHECK(lfs::two_sample_ks(a, b) == 1.0);
  CHECK(lfs::two_sample_ks(a, a) == 0.0);
  const std::vector<double> c{1.0, 2.0, 4.0, 5.0};
  CHECK(lfs::two_sample_ks(a, c) == doctest::Approx(0.5));
}

TEST_CASE("permutation KS test") {
  lfs::RandomStream rng(4);
  const auto a = normal_draws(2000, rng), b = normal_draws(2000, rng);
  const auto same = lfs::ks_permutation_test(a, b, 999, rng);
  CHECK(same.statistic == lfs::two_sample_ks(a, b));
  CHECK(same.p_value > 0.01);
  const auto shifted = lfs::ks_permutation_test(a, normal_draws(2000, rng, 0.3), 999, rng);
  CHECK(shifted.p_value == doctest::Approx(1.0 / 1000.0));

  // Null p-values are roughly uniform.
  int small = 0;
  for (int r = 0; r < 200; ++r) {
    const auto x = normal_draws(100, rng), y = normal_draws(150, rng);
    if (lfs::ks_permutation_test(x, y, 199, rng).p_value <= 0.1) ++small;
  }
  CHECK(small > 5);
  CHECK(small < 40);

  // Discrete data with many ties.
  std::vector<double> d1, d2;
  for (int i = 0; i < 500; ++i) {
    d1.push_back(static_cast<double>(rng.binomial(5, 0.5)));
    d2.push_back(static_cast<double>(rng.binomial(5, 0.5)));
  }
  CHECK(lfs::ks_permutation_test(d1, d2, 499, rng).p_value > 0.01);
}

TEST_CASE("batch means standard error") {
  lfs::RandomStream rng(5);
  const auto iid = normal_draws(100000, rng);
  CHECK(lfs::batch_means_se(iid) == doctest::Approx(1.0 / std::sqrt(100000.0)).epsilon(0.3));
  // AR(1) with rho = 0.9 inflates the variance of the mean by (1 + rho) / (1 - rho).
  std::vector<double> ar(200000);
  double x = 0.0;
  for (double& v : ar) {
    x = 0.9 * x + std::sqrt(1 - 0.81) * rng.normal();
    v = x;
  }
  CHECK(lfs::batch_means_se(ar) == doctest::Approx(std::sqrt(19.0 / 200000.0)).epsilon(0.3));
}

TEST_CASE("bootstrap intervals") {
  lfs::RandomStream rng(6);
  std::vector<double> a(40), b(40);
  for (auto& v : a) v = 1.0 + 0.1 * rng.normal();
  for (auto& v : b) v = 0.1 * rng.normal();
  const auto diff = lfs::bootstrap_mean_difference(a, b, 0.99, 4000, rng);
  CHECK(diff.lo > 0.9);
  CHECK(diff.hi < 1.1);
  CHECK(diff.contains(lfs::mean(a) - lfs::mean(b)));

  const std::vector<double> x{0.0, 1.0, 2.0};
  const std::vector<double> y{1.0, 3.0, 5.0};
  CHECK(lfs::least_squares_slope(x, y) == doctest::Approx(2.0));
  std::vector<std::vector<double>> flat(3), rising(3);
  for (int g = 0; g < 3; ++g)
    for (int r = 0; r < 10; ++r) {
      flat[g].push_back(rng.normal());
      rising[g].push_back(2.0 * g + 0.1 * rng.normal());
    }
  CHECK(lfs::bootstrap_slope(x, flat, 0.99, 4000, rng).contains(0.0));
  const auto up = lfs::bootstrap_slope(x, rising, 0.99, 4000, rng);
  CHECK(up.lo > 1.8);
  CHECK(up.hi < 2.2);

  // Coverage of the difference interval over repeated experiments.
  int covered = 0;
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> p(30), q(30);
    for (auto& v : p) v = rng.normal();
    for (auto& v : q) v = rng.normal();
    if (lfs::bootstrap_mean_difference(p, q, 0.9, 1000, rng).contains(0.0)) ++covered;
  }
  CHECK(covered > 160);
}
