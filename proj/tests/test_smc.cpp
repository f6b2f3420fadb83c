#include <cmath>
#include <memory>
#include <numeric>
#include <vector>

#include "doctest.h"

#include "lfs/errors.hpp"
#include "lfs/output.hpp"
#include "lfs/rejection.hpp"
#include "lfs/smc.hpp"
#include "lfs/stats.hpp"

using lfs::BandwidthSchedule;
using lfs::KernelKind;
using lfs::Particle;
using lfs::Problem;
using lfs::ProposalSpec;
using lfs::SmcVariant;
using lfs::SmoothingKernel;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Problem normal_problem(KernelKind kind = KernelKind::gaussian) {
  return Problem{std::make_shared<lfs::NormalMeanModel>(), {0.0}, SmoothingKernel(kind, 1.0)};
}

lfs::SmcSettings smc_settings(SmcVariant variant, std::size_t N, std::size_t S = 1) {
  lfs::SmcSettings s;
  s.S = S;
  s.N = N;
  s.variant = variant;
  s.mutation = ProposalSpec::random_walk({0.5});
  return s;
}

Particle particle(double theta, std::initializer_list<double> summaries) {
  Particle p;
  p.theta = {theta};
  p.bundle = lfs::AuxiliaryBundle(summaries.size(), 1);
  std::size_t s = 0;
  for (double t : summaries) p.bundle[s++][0] = t;
  return p;
}

struct WeightedEstimate {
  double mean, se, variance;
};

// Mean and variance over independent SMC replicates.
std::vector<lfs::Moments> replicate_moments(const Problem& problem, const BandwidthSchedule& schedule,
                                            const lfs::SmcSettings& s, int replicates,
                                            std::uint64_t seed) {
  std::vector<lfs::Moments> out;
  for (int r = 0; r < replicates; ++r)
    out.push_back(lfs::weighted_moments(lfs::samples_of(lfs::run_smc(problem, schedule, s, seed + r))));
  return out;
}

WeightedEstimate summarize(const std::vector<lfs::Moments>& reps) {
  std::vector<double> means, variances;
  for (const auto& m : reps) {
    means.push_back(m.mean[0]);
    variances.push_back(m.variance[0]);
  }
  return {lfs::mean(means), lfs::sample_sd(means) / std::sqrt(static_cast<double>(means.size())),
          lfs::mean(variances)};
}

} // namespace

TEST_CASE("bandwidth schedules") {
  const auto g = BandwidthSchedule::geometric(2.0, 0.25, 15);
  REQUIRE(g.size() == 15);
  CHECK(g[0] == 2.0);
  CHECK(g[14] == 0.25);
  for (std::size_t k = 1; k < g.size(); ++k) CHECK(g[k] / g[k - 1] == doctest::Approx(std::pow(0.125, 1.0 / 14.0)));
  CHECK(BandwidthSchedule::geometric(2.0, 0.25, 1).values() == std::vector<double>{0.25});
  CHECK_THROWS_AS(BandwidthSchedule::geometric(0.25, 2.0, 5), lfs::ConfigError);
  CHECK_THROWS_AS(BandwidthSchedule::geometric(2.0, 0.25, 0), lfs::ConfigError);
  CHECK_THROWS_AS(BandwidthSchedule::explicit_values({1.0, 1.0}), lfs::ConfigError);
  CHECK_THROWS_AS(BandwidthSchedule::explicit_values({1.0, -0.5}), lfs::ConfigError);
  CHECK_THROWS_AS(BandwidthSchedule::explicit_values({}), lfs::ConfigError);
  CHECK(lfs::parse_smc_variant(lfs::to_string(SmcVariant::backward_kernel)) == SmcVariant::backward_kernel);
  CHECK_THROWS_AS(lfs::parse_smc_variant("pmc"), lfs::ConfigError);
}

TEST_CASE("joint incremental weights") {
  const lfs::NormalMeanModel model;
  const std::vector<double> ty{0.0};
  const SmoothingKernel uniform(KernelKind::uniform, 1.0);
  const auto inside = particle(0.2, {0.1, -0.3});
  CHECK(lfs::incremental_weight_joint(inside, inside, 0.7, 0.7, uniform, ty, model) == 0.0);
  CHECK(lfs::incremental_weight_joint(inside, inside, 0.5, 0.8, uniform, ty, model) ==
        doctest::Approx(std::log(0.8 / 0.5)));
  const auto outside = particle(0.2, {0.6, -0.7});
  CHECK(lfs::incremental_weight_joint(outside, outside, 0.5, 0.8, uniform, ty, model) == kNegInf);

  const SmoothingKernel gauss(KernelKind::gaussian, 1.0);
  const auto p = particle(-0.4, {0.9, 0.2, -1.1});
  CHECK(lfs::incremental_weight_joint(p, p, 1.3, 1.3, gauss, ty, model) == 0.0);
  CHECK(lfs::combine_weight_terms(kNegInf, 0.0, 0.0, 0.0) == kNegInf);
  CHECK(lfs::combine_weight_terms(1.0, kNegInf, 0.0, 0.0) == kNegInf);
  CHECK(lfs::combine_weight_terms(1.0, 0.5, 0.25, 0.125) == doctest::Approx(0.625));
}

TEST_CASE("tightening a compact kernel only removes support") {
  const lfs::NormalMeanModel model;
  const std::vector<double> ty{0.0};
  const SmoothingKernel uniform(KernelKind::uniform, 1.0);
  lfs::RandomStream rng(1);
  std::vector<Particle> particles;
  for (int i = 0; i < 2000; ++i) {
    const double theta = rng.normal();
    Particle p;
    p.theta = {theta};
    p.bundle = model.simulate(p.theta, 2, rng);
    particles.push_back(std::move(p));
  }
  const auto schedule = BandwidthSchedule::geometric(3.0, 0.1, 12);
  std::vector<bool> alive(particles.size(), true);
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    for (std::size_t i = 0; i < particles.size(); ++i) {
      const bool now = lfs::joint_logdensity_unnorm(particles[i].theta, particles[i].bundle, ty,
                                                    uniform.with_bandwidth(schedule[k]), model) > kNegInf;
      REQUIRE((!now || alive[i]));
      alive[i] = now;
    }
  }
}

TEST_CASE("backward-kernel incremental weights") {
  const lfs::NormalMeanModel model;
  const auto rw = ProposalSpec::random_walk({0.5});
  const std::vector<double> theta{0.3};
  const std::vector<lfs::ParamVector> one{{0.1}};
  const double m = std::exp(rw.log_density(one[0], theta, model));
  const double p = 0.07;
  CHECK(lfs::incremental_weight_backward(theta, std::log(p), one, std::vector<double>{1.0}, rw, model) ==
        doctest::Approx(std::log(p / m)));

  const std::vector<lfs::ParamVector> two{{0.1}, {-0.6}};
  const double m1 = std::exp(rw.log_density(two[0], theta, model));
  const double m2 = std::exp(rw.log_density(two[1], theta, model));
  CHECK(lfs::incremental_weight_backward(theta, std::log(p), two, std::vector<double>{0.5, 0.5}, rw, model) ==
        doctest::Approx(std::log(p) - std::log(0.5 * m1 + 0.5 * m2)));
  CHECK(lfs::incremental_weight_backward(theta, kNegInf, two, std::vector<double>{0.5, 0.5}, rw, model) ==
        kNegInf);
  // Zero-weight ancestors do not enter the mixture.
  CHECK(lfs::incremental_weight_backward(theta, std::log(p), two, std::vector<double>{1.0, 0.0}, rw, model) ==
        doctest::Approx(std::log(p / m1)));
}

TEST_CASE("independence mutation under a flat kernel gives flat weights") {
  const Problem problem{std::make_shared<lfs::NormalMeanModel>(), {0.0},
                        SmoothingKernel(KernelKind::uniform, 1e6)};
  auto s = smc_settings(SmcVariant::backward_kernel, 500);
  s.mutation = ProposalSpec::independence_prior();
  const auto out = lfs::run_smc(problem, BandwidthSchedule::explicit_values({2e6, 1e6}), s, 2);
  for (const auto& step : out.steps) CHECK(step.ess == doctest::Approx(500.0).epsilon(1e-9));
}

TEST_CASE("effective sample size") {
  CHECK(lfs::ess(std::vector<double>(100, 0.01)) == doctest::Approx(100.0));
  std::vector<double> degenerate(50, 0.0);
  degenerate[3] = 1.0;
  CHECK(lfs::ess(degenerate) == 1.0);
  CHECK(lfs::ess(std::vector<double>{0.5, 0.5, 0.0, 0.0}) == 2.0);
}

TEST_CASE("normalization") {
  std::vector<double> log_w{-1000.0, -1001.0, kNegInf, -999.5};
  const auto w = lfs::normalize_log_weights(log_w, 1);
  CHECK(std::accumulate(w.begin(), w.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(w[2] == 0.0);
  CHECK(log_w[2] == kNegInf);
  CHECK(std::exp(log_w[3]) == doctest::Approx(w[3]));
  std::vector<double> dead{kNegInf, kNegInf};
  CHECK_THROWS_AS(lfs::normalize_log_weights(dead, 4), lfs::WeightCollapse);
}

TEST_CASE("systematic resampling") {
  const std::vector<double> equal(8, 0.125);
  for (double u : {0.01, 0.5, 0.99}) {
    const auto a = lfs::systematic_ancestors(equal, u);
    for (std::size_t i = 0; i < 8; ++i) CHECK(a[i] == i);
  }
  std::vector<double> first(6, 0.0);
  first[0] = 1.0;
  for (std::size_t a : lfs::systematic_ancestors(first, 0.7)) CHECK(a == 0);

  const std::vector<double> w{0.05, 0.3, 0.15, 0.02, 0.28, 0.2};
  const std::size_t n = w.size();
  std::vector<double> sum(n, 0.0), sum_sq(n, 0.0);
  lfs::RandomStream rng(3);
  const int reps = 10000;
  for (int r = 0; r < reps; ++r) {
    std::vector<double> counts(n, 0.0);
    for (std::size_t a : lfs::systematic_ancestors(w, rng.uniform())) counts[a] += 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      sum[i] += counts[i];
      sum_sq[i] += counts[i] * counts[i];
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double mean = sum[i] / reps;
    const double sd = std::sqrt(std::max(sum_sq[i] / reps - mean * mean, 1e-12));
    CHECK(std::abs(mean - static_cast<double>(n) * w[i]) < 3.0 * sd / std::sqrt(double(reps)) + 1e-12);
  }

  lfs::ParticleSystem system;
  system.step = 3;
  for (std::size_t i = 0; i < n; ++i) {
    Particle p = particle(static_cast<double>(i), {0.0});
    p.log_weight = std::log(w[i]);
    system.particles.push_back(p);
  }
  const auto resampled = lfs::resample_systematic(system, rng);
  CHECK(resampled.particles.size() == n);
  CHECK(resampled.ess == static_cast<double>(n));
  for (const auto& p : resampled.particles) CHECK(std::exp(p.log_weight) == doctest::Approx(1.0 / n));
}

TEST_CASE("joint-move SMC recovers the narrow-bandwidth posterior") {
  const auto problem = normal_problem();
  const auto schedule = BandwidthSchedule::geometric(2.0, 0.25, 15);
  std::vector<lfs::SmcStepReport> steps;
  const auto out = lfs::run_smc(problem, schedule, smc_settings(SmcVariant::joint_mcmc_move, 2000), 4,
                                [&](const lfs::SmcStepReport& r) { steps.push_back(r); });
  REQUIRE(steps.size() == 15);
  for (const auto& r : steps) {
    CHECK(r.ess >= 1.0);
    CHECK(r.ess <= 2000.0 * (1 + 1e-12));
  }
  const auto w = out.system.weights();
  CHECK(std::accumulate(w.begin(), w.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));

  const auto samples = lfs::samples_of(out);
  const auto m = lfs::weighted_moments(samples);
  const double oracle_var = 1.0 / (1.0 + 1.0 / 1.0625);
  CHECK(oracle_var == doctest::Approx(0.5151515151515151));
  // Weighted standard error with the effective sample size.
  const double se = std::sqrt(m.variance[0] / lfs::ess(samples.normalized_weights()));
  CHECK(std::abs(m.mean[0]) < 3.0 * se);
  CHECK(std::abs(m.variance[0] / oracle_var - 1.0) < 0.07);
}

TEST_CASE("a one-step schedule is importance sampling with the rejection target") {
  const auto problem = normal_problem();
  const auto schedule = BandwidthSchedule::explicit_values({0.8});
  lfs::RandomStream rng(5);
  auto s = smc_settings(SmcVariant::joint_mcmc_move, 10000);
  const auto out = lfs::run_smc(problem, schedule, s, 6);
  const auto resampled = lfs::resample_systematic(out.system, rng);
  std::vector<double> smc_values;
  for (const auto& p : resampled.particles) smc_values.push_back(p.theta[0]);

  lfs::RejectionSettings rs;
  rs.n_accept = 10000;
  const auto rej = lfs::run_rejection(problem.at_bandwidth(0.8), rs, 7);
  const auto test = lfs::ks_permutation_test(smc_values, lfs::samples_of(rej).column(0), 499, rng);
  CHECK(test.p_value > 0.01);
  // Initial weights are the pooled kernel values.
  for (const auto& p : out.system.particles)
    REQUIRE(p.log_num == lfs::joint_logdensity_unnorm(p.theta, p.bundle, problem.observed,
                                                      problem.kernel.with_bandwidth(0.8), *problem.model));
}

TEST_CASE("both variants agree, and S does not change the target") {
  const auto problem = normal_problem();
  const auto schedule = BandwidthSchedule::geometric(2.0, 0.5, 8);
  std::vector<WeightedEstimate> estimates;
  for (SmcVariant v : {SmcVariant::joint_mcmc_move, SmcVariant::backward_kernel})
    for (std::size_t S : {1u, 5u})
      estimates.push_back(summarize(replicate_moments(problem, schedule, smc_settings(v, 500, S), 12,
                                                      100 * S + 1000 * static_cast<int>(v))));
  for (std::size_t a = 0; a < estimates.size(); ++a)
    for (std::size_t b = a + 1; b < estimates.size(); ++b) {
      CAPTURE(a);
      CAPTURE(b);
      CHECK(std::abs(estimates[a].mean - estimates[b].mean) <
            3.0 * std::hypot(estimates[a].se, estimates[b].se));
    }
}

TEST_CASE("backward variant simulates exactly S datasets per particle per step") {
  const auto counting = std::make_shared<lfs::CountingModel>(std::make_shared<lfs::NormalMeanModel>());
  const Problem problem{counting, {0.0}, SmoothingKernel(KernelKind::gaussian, 1.0)};
  const auto schedule = BandwidthSchedule::geometric(2.0, 0.3, 6);
  for (std::optional<double> threshold : {std::optional<double>{}, std::optional<double>{0.8}}) {
    auto s = smc_settings(SmcVariant::backward_kernel, 300, 3);
    s.rejection_threshold = threshold;
    counting->reset();
    std::uint64_t last = 0;
    std::size_t dropped = 0;
    lfs::run_smc(problem, schedule, s, 8, [&](const lfs::SmcStepReport& r) {
      CHECK(counting->calls() - last == 300 * 3);
      last = counting->calls();
      dropped += r.dropped;
    });
    if (threshold) CHECK(dropped > 0);
  }

  // The weight itself never touches the simulator.
  lfs::RandomStream rng(9);
  std::vector<lfs::ParamVector> prev;
  std::vector<double> w;
  for (int i = 0; i < 50; ++i) {
    prev.push_back(counting->prior_sample(rng));
    w.push_back(1.0 / 50);
  }
  counting->reset();
  lfs::incremental_weight_backward(std::vector<double>{0.1}, -1.0, prev, w,
                                   ProposalSpec::random_walk({0.5}), *counting);
  CHECK(counting->calls() == 0);
}

TEST_CASE("rejection threshold keeps a valid weighted population") {
  const auto problem = normal_problem();
  const auto schedule = BandwidthSchedule::geometric(2.0, 0.5, 8);
  auto s = smc_settings(SmcVariant::backward_kernel, 1000);
  s.rejection_threshold = 0.5;
  std::size_t dropped = 0;
  const auto out = lfs::run_smc(problem, schedule, s, 10, [&](const lfs::SmcStepReport& r) {
    dropped += r.dropped;
  });
  CHECK(dropped > 0);
  const auto w = out.system.weights();
  CHECK(std::accumulate(w.begin(), w.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  const auto m = lfs::weighted_moments(lfs::samples_of(out));
  const auto o = lfs::require_oracle(*problem.model, problem.observed, problem.kernel.with_bandwidth(0.5));
  CHECK(std::abs(m.mean[0] - o.mean()) < 0.1);
  CHECK(std::abs(m.variance[0] / o.variance() - 1.0) < 0.15);

  auto joint = smc_settings(SmcVariant::joint_mcmc_move, 100);
  joint.rejection_threshold = 0.5;
  CHECK_THROWS_AS(lfs::run_smc(problem, schedule, joint, 1), lfs::ConfigError);
  s.rejection_threshold = 1.5;
  CHECK_THROWS_AS(lfs::run_smc(problem, schedule, s, 1), lfs::ConfigError);
}

TEST_CASE("results do not depend on the worker count") {
  const auto problem = normal_problem(KernelKind::epanechnikov);
  const auto schedule = BandwidthSchedule::geometric(3.0, 0.4, 6);
  for (SmcVariant v : {SmcVariant::joint_mcmc_move, SmcVariant::backward_kernel}) {
    auto s = smc_settings(v, 400, 2);
    if (v == SmcVariant::backward_kernel) s.rejection_threshold = 0.5;
    const auto serial = lfs::run_smc(problem, schedule, s, 11);
    s.threads = 3;
    const auto parallel = lfs::run_smc(problem, schedule, s, 11);
    for (std::size_t i = 0; i < 400; ++i) {
      REQUIRE(serial.system.particles[i].theta == parallel.system.particles[i].theta);
      REQUIRE(serial.system.particles[i].log_weight == parallel.system.particles[i].log_weight);
      REQUIRE(serial.system.particles[i].bundle == parallel.system.particles[i].bundle);
    }
  }
}

TEST_CASE("a kernel that kills every particle is reported") {
  const Problem problem{std::make_shared<lfs::NormalMeanModel>(), {50.0},
                        SmoothingKernel(KernelKind::uniform, 1.0)};
  CHECK_THROWS_AS(lfs::run_smc(problem, BandwidthSchedule::explicit_values({0.01}),
                               smc_settings(SmcVariant::joint_mcmc_move, 100), 12),
                  lfs::WeightCollapse);
}
