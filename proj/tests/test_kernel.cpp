#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"

#include "lfs/errors.hpp"
#include "lfs/kernel.hpp"
#include "lfs/random.hpp"

using lfs::AuxiliaryBundle;
using lfs::KernelKind;
using lfs::SmoothingKernel;

namespace {

constexpr KernelKind kAllKinds[] = {KernelKind::uniform, KernelKind::epanechnikov,
                                    KernelKind::gaussian};

AuxiliaryBundle bundle_of(std::initializer_list<double> values) {
  AuxiliaryBundle b(values.size(), 1);
  std::size_t s = 0;
  for (double v : values) b[s++][0] = v;
  return b;
}

} // namespace

TEST_CASE("kernel values") {
  const std::vector<double> half{0.5}, two{2.0}, zero{0.0};
  CHECK(SmoothingKernel(KernelKind::uniform, 1.0).evaluate(half) == doctest::Approx(0.5));
  CHECK(SmoothingKernel(KernelKind::uniform, 1.0).evaluate(two) == 0.0);
  CHECK(SmoothingKernel(KernelKind::gaussian, 1.0).evaluate(zero) ==
        doctest::Approx(0.3989422804014327).epsilon(1e-14));
  CHECK(SmoothingKernel(KernelKind::epanechnikov, 2.0).evaluate(std::vector<double>{1.0}) ==
        doctest::Approx(0.75 * 0.75 / 2.0));
  // The support boundary belongs to the support.
  CHECK(SmoothingKernel(KernelKind::uniform, 1.0).evaluate(std::vector<double>{1.0}) == 0.5);
}

TEST_CASE("sup values") {
  CHECK(SmoothingKernel(KernelKind::uniform, 2.0).sup_value() == doctest::Approx(0.25));
  CHECK(SmoothingKernel(KernelKind::gaussian, 1.0).sup_value() ==
        doctest::Approx(0.3989422804014327).epsilon(1e-14));
  CHECK(SmoothingKernel(KernelKind::epanechnikov, 1.0).sup_value() == doctest::Approx(0.75));
  for (KernelKind kind : kAllKinds) {
    const SmoothingKernel k(kind, 0.7);
    CHECK(k.sup_value() == k.evaluate(std::vector<double>{0.0}));
    CHECK(k.log_sup_value() == doctest::Approx(std::log(k.sup_value())));
  }
}

TEST_CASE("nonpositive bandwidth is a construction error") {
  CHECK_THROWS_AS(SmoothingKernel(KernelKind::gaussian, 0.0), lfs::ConfigError);
  CHECK_THROWS_AS(SmoothingKernel(KernelKind::uniform, -1.0), lfs::ConfigError);
  CHECK_THROWS_AS(SmoothingKernel(KernelKind::uniform, 1.0).with_bandwidth(0.0), lfs::ConfigError);
  CHECK_THROWS_AS(SmoothingKernel(KernelKind::uniform, std::nan("")), lfs::ConfigError);
}

TEST_CASE("kind names round-trip") {
  for (KernelKind kind : kAllKinds) CHECK(lfs::parse_kernel_kind(lfs::to_string(kind)) == kind);
  CHECK_THROWS_AS(lfs::parse_kernel_kind("triangle"), lfs::ConfigError);
}

TEST_CASE("pooled kernel") {
  // Gaussian h = 1 at distances giving per-dataset values 0.2 and 0.4 is awkward;
  // use uniform kernels of bandwidth 2.5 and 1.25, which have exactly these values.
  const std::vector<double> ty{0.0};
  const SmoothingKernel wide(KernelKind::uniform, 2.5), narrow(KernelKind::uniform, 1.25);
  CHECK(wide.evaluate(ty) == doctest::Approx(0.2));
  CHECK(narrow.evaluate(ty) == doctest::Approx(0.4));

  const SmoothingKernel k(KernelKind::epanechnikov, 1.0);
  const auto b = bundle_of({0.0, std::sqrt(7.0 / 15.0)}); // values 0.75 and 0.4
  CHECK(k.pooled_evaluate(ty, b) == doctest::Approx((0.75 + 0.4) / 2.0));

  const auto single = bundle_of({0.3});
  CHECK(k.pooled_evaluate(ty, single) == k.between(ty, single[0]));
  CHECK(k.log_pooled_evaluate(ty, single) == k.log_between(ty, single[0]));

  const SmoothingKernel u(KernelKind::uniform, 1.0);
  CHECK(u.pooled_evaluate(ty, bundle_of({2.0, -2.0, 3.0})) == 0.0);
  CHECK(u.log_pooled_evaluate(ty, bundle_of({2.0, -2.0, 3.0})) ==
        -std::numeric_limits<double>::infinity());

  CHECK_THROWS_AS(k.pooled_evaluate(ty, AuxiliaryBundle{}), lfs::ConfigError);
}

TEST_CASE("log pooled kernel matches the log of the pooled kernel") {
  lfs::RandomStream rng(11);
  const std::vector<double> ty{0.2};
  for (KernelKind kind : kAllKinds) {
    const SmoothingKernel k(kind, 0.8);
    for (int rep = 0; rep < 500; ++rep) {
      AuxiliaryBundle b(1 + rep % 7, 1);
      for (std::size_t s = 0; s < b.size(); ++s) b[s][0] = rng.normal(0.0, 1.0);
      const double linear = k.pooled_evaluate(ty, b);
      const double logv = k.log_pooled_evaluate(ty, b);
      if (linear == 0.0) REQUIRE(logv == -std::numeric_limits<double>::infinity());
      else REQUIRE(logv == doctest::Approx(std::log(linear)).epsilon(1e-12));
    }
  }
  // Far tails stay finite in log space even when the linear value underflows.
  const SmoothingKernel g(KernelKind::gaussian, 0.01);
  const auto far = bundle_of({50.0, 60.0});
  CHECK(g.pooled_evaluate(ty, far) == 0.0);
  CHECK(std::isfinite(g.log_pooled_evaluate(ty, far)));
}

TEST_CASE("symmetry, monotonicity, support") {
  lfs::RandomStream rng(12);
  for (KernelKind kind : kAllKinds) {
    const SmoothingKernel k(kind, 1.3);
    for (int i = 0; i < 10000; ++i) {
      const std::vector<double> u{rng.normal(0.0, 2.0)}, minus{-u[0]};
      REQUIRE(k.evaluate(u) == k.evaluate(minus));
      REQUIRE(k.evaluate(u) >= 0.0);
      REQUIRE(k.evaluate(u) <= k.sup_value());
      if (kind != KernelKind::gaussian && std::abs(u[0]) > 1.3) REQUIRE(k.evaluate(u) == 0.0);
    }
    double previous = k.at_distance(0.0);
    for (int i = 1; i <= 4000; ++i) {
      const double value = k.at_distance(i * 0.001);
      REQUIRE(value <= previous);
      previous = value;
    }
  }
}

TEST_CASE("pooling bound and sup dominance") {
  lfs::RandomStream rng(13);
  const std::vector<double> ty{0.0};
  for (KernelKind kind : kAllKinds) {
    const SmoothingKernel k(kind, 0.9);
    for (int rep = 0; rep < 10000; ++rep) {
      AuxiliaryBundle b(1 + rep % 5, 1);
      double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
      for (std::size_t s = 0; s < b.size(); ++s) {
        b[s][0] = rng.normal(0.0, 1.5);
        lo = std::min(lo, k.between(ty, b[s]));
        hi = std::max(hi, k.between(ty, b[s]));
      }
      const double pooled = k.pooled_evaluate(ty, b);
      REQUIRE(pooled >= lo * (1 - 1e-15));
      REQUIRE(pooled <= hi * (1 + 1e-15));
      const double ratio = pooled / k.sup_value();
      REQUIRE(ratio >= 0.0);
      REQUIRE(ratio <= 1.0);
    }
  }
}

TEST_CASE("summary distance") {
  const lfs::SummaryDistance euclid;
  const std::vector<double> a{1.0, 2.0}, b{4.0, 6.0};
  CHECK(euclid(a, b) == doctest::Approx(5.0));
  CHECK(euclid(a, a) == 0.0);
  CHECK(euclid(a, b) == euclid(b, a));

  const lfs::SummaryDistance weighted({4.0, 1.0});
  CHECK(weighted(a, b) == doctest::Approx(std::sqrt(4.0 * 9.0 + 16.0)));
  CHECK_THROWS_AS(lfs::SummaryDistance({1.0, 0.0}), lfs::ConfigError);
  CHECK_THROWS_AS(weighted(std::vector<double>{1.0}, std::vector<double>{2.0}), lfs::ConfigError);

  // The kernel sees only the reduced distance.
  const SmoothingKernel k(KernelKind::gaussian, 2.0, weighted);
  CHECK(k.between(a, b) == doctest::Approx(k.at_distance(weighted(a, b))));
}
