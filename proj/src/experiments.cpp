#include "lfs/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>

#include "lfs/errors.hpp"
#include "lfs/parallel.hpp"

namespace lfs {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Seeds for independent runs inside an experiment: (experiment, slot, replicate).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t slot, std::uint32_t replicate) {
  RandomStream rng(seed, StreamTag::experiment, slot, replicate);
  return rng();
}

// Exact comparison that treats equal infinities as agreeing.
double discrepancy(double a, double b) {
  if (a == b) return 0.0;
  if (!std::isfinite(a) || !std::isfinite(b)) return kInf;
  return std::abs(a - b);
}

double acceptance_probability(double log_ratio) {
  return log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
}

struct Worst {
  double value = 0.0;
  Json where;

  void update(double d, const Json& location) {
    if (d > value || (std::isnan(d) && !std::isnan(value))) {
      value = std::isnan(d) ? kInf : d;
      where = location;
    }
  }
};

// ---- equivalence ------------------------------------------------------------

// pi_hat_M(theta) = pi(theta) K~_h(t_y, t^{1:S}) built from its two factors.
double marginal_bookkeeping(std::span<const double> theta, const AuxiliaryBundle& bundle,
                            const Problem& problem, const SmoothingKernel& kernel) {
  const double log_prior = problem.model->prior_logdensity(theta);
  const double log_kernel = kernel.log_pooled_evaluate(problem.observed, bundle);
  return log_kernel + log_prior;
}

Json mcmc_dual_bookkeeping(const Problem& problem, std::size_t S, std::size_t iterations,
                           const ProposalSpec& proposal, std::uint64_t seed, Worst& worst) {
  McmcSettings settings;
  settings.S = S;
  settings.variant = McmcVariant::carried_bundle;
  settings.proposal = proposal;
  settings.n_iter = iterations;
  settings.burn_in = 0;
  std::size_t observed = 0;
  const Model& model = *problem.model;
  auto observer = [&](const McmcTransition& t) {
    ++observed;
    const double marg_prop = marginal_bookkeeping(t.proposed.theta, t.proposed.bundle, problem,
                                                  problem.kernel);
    const double marg_curr = marginal_bookkeeping(t.current.theta, t.current.bundle, problem,
                                                  problem.kernel);
    const double joint_prop = joint_logdensity_unnorm(t.proposed.theta, t.proposed.bundle,
                                                      problem.observed, problem.kernel, model);
    const double joint_curr = joint_logdensity_unnorm(t.current.theta, t.current.bundle,
                                                      problem.observed, problem.kernel, model);
    const double ratio_marginal =
        acceptance_logratio(marg_prop, marg_curr, t.proposed.theta, t.current.theta, proposal, model);
    const double ratio_joint = acceptance_logratio(joint_prop, joint_curr, t.proposed.theta,
                                                   t.current.theta, proposal, model);
    double d = discrepancy(acceptance_probability(ratio_marginal),
                           acceptance_probability(ratio_joint));
    d = std::max(d, discrepancy(ratio_marginal, ratio_joint));
    d = std::max(d, discrepancy(ratio_joint, t.log_ratio));
    d = std::max(d, discrepancy(marg_curr, t.current.log_num));
    worst.update(d, Json{{"sampler", "mcmc"}, {"s", S}, {"iteration", t.iteration}});
  };
  RandomStream rng(seed, StreamTag::mcmc, 0);
  const auto out = run_mcmc(problem, settings, rng, observer);
  return Json{{"s", S}, {"iterations", observed}, {"acceptance_rate", out.acceptance_rate()}};
}

Json smc_dual_bookkeeping(const Problem& problem, std::size_t S, std::size_t records,
                          const RunConfig& config, std::uint64_t seed, Worst& worst) {
  const auto schedule = make_schedule(config.smc);
  if (schedule.size() < 2) throw ConfigError("equivalence check needs at least 2 SMC steps");
  auto settings = make_smc_settings(config, *problem.model);
  settings.S = S;
  settings.variant = SmcVariant::joint_mcmc_move;
  settings.rejection_threshold.reset();
  settings.N = std::max<std::size_t>(2, (records + schedule.size() - 2) / (schedule.size() - 1));
  const Model& model = *problem.model;
  std::size_t observed = 0;
  auto on_weight = [&](const SmcWeightRecord& r) {
    ++observed;
    const SmoothingKernel k_new = problem.kernel.with_bandwidth(r.h_new);
    const SmoothingKernel k_prev = problem.kernel.with_bandwidth(r.h_prev);
    const double weight_marginal =
        combine_weight_terms(marginal_bookkeeping(r.next.theta, r.next.bundle, problem, k_new),
                             marginal_bookkeeping(r.prev.theta, r.prev.bundle, problem, k_prev),
                             0.0, 0.0);
    const double weight_joint = combine_weight_terms(
        joint_logdensity_unnorm(r.next.theta, r.next.bundle, problem.observed, k_new, model),
        joint_logdensity_unnorm(r.prev.theta, r.prev.bundle, problem.observed, k_prev, model), 0.0,
        0.0);
    double d = discrepancy(weight_marginal, weight_joint);
    d = std::max(d, discrepancy(weight_joint, r.log_incremental));
    worst.update(d, Json{{"sampler", "smc"}, {"s", S}, {"step", r.step}, {"particle", r.particle}});
  };
  run_smc(problem, schedule, settings, seed, {}, on_weight);
  return Json{{"s", S}, {"weights", observed}, {"particles", settings.N}};
}

struct ReplicateMoments {
  std::vector<double> means;
  std::vector<double> variances;
};

Json summarize_replicates(const std::string& sampler, const ReplicateMoments& m) {
  const double r = static_cast<double>(m.means.size());
  return Json{{"sampler", sampler},
              {"replicates", m.means.size()},
              {"mean", mean(m.means)},
              {"mean_se", sample_sd(m.means) / std::sqrt(r)},
              {"variance", mean(m.variances)},
              {"variance_se", sample_sd(m.variances) / std::sqrt(r)}};
}

ReplicateMoments replicate(std::size_t replicates, int threads,
                           const std::function<WeightedSamples(std::size_t)>& run) {
  ReplicateMoments m{std::vector<double>(replicates), std::vector<double>(replicates)};
  parallel_for(replicates, threads, [&](std::size_t r) {
    const auto moments = weighted_moments(run(r));
    m.means[r] = moments.mean[0];
    m.variances[r] = moments.variance[0];
  });
  return m;
}

Json cross_sampler_table(const RunConfig& config, std::size_t S, int threads, bool& all_agree) {
  const auto& ex = config.experiment;
  const Problem base = make_problem(config);
  if (base.model->param_dim() != 1)
    throw ConfigError("cross-sampler comparison needs a scalar parameter");
  const auto schedule = make_schedule(config.smc);
  const double h = schedule.values().back();
  const Problem problem = base.at_bandwidth(h);
  const std::uint64_t seed = config.run.seed;
  const std::uint64_t slot = 1000 + S * 8;

  std::vector<std::pair<std::string, ReplicateMoments>> rows;
  rows.emplace_back("rejection", replicate(ex.replicates, threads, [&](std::size_t r) {
    RejectionSettings s = make_rejection_settings(config);
    s.S = S;
    s.n_accept = ex.cross_samples;
    s.threads = 1;
    return samples_of(run_rejection(problem, s, derive_seed(seed, slot, r)));
  }));
  rows.emplace_back("mcmc-carried", replicate(ex.replicates, threads, [&](std::size_t r) {
    McmcSettings s = make_mcmc_settings(config, *problem.model);
    s.S = S;
    s.variant = McmcVariant::carried_bundle;
    s.n_iter = ex.cross_mcmc_iter;
    s.burn_in = ex.cross_mcmc_iter / 10;
    s.thin = 1;
    RandomStream rng(derive_seed(seed, slot + 1, r), StreamTag::mcmc, 0);
    return samples_of(run_mcmc(problem, s, rng));
  }));
  for (SmcVariant variant : {SmcVariant::joint_mcmc_move, SmcVariant::backward_kernel}) {
    const std::uint64_t vslot = slot + 2 + static_cast<std::uint64_t>(variant);
    rows.emplace_back("smc-" + std::string(to_string(variant)),
                      replicate(ex.replicates, threads, [&](std::size_t r) {
                        SmcSettings s = make_smc_settings(config, *problem.model);
                        s.S = S;
                        s.N = ex.cross_particles;
                        s.variant = variant;
                        s.threads = 1;
                        if (variant == SmcVariant::joint_mcmc_move) s.rejection_threshold.reset();
                        return samples_of(run_smc(base, schedule, s, derive_seed(seed, vslot, r)));
                      }));
  }

  Json samplers = Json::array();
  for (const auto& [name, m] : rows) samplers.push_back(summarize_replicates(name, m));

  Json pairs = Json::array();
  for (std::size_t a = 0; a < samplers.size(); ++a) {
    for (std::size_t b = a + 1; b < samplers.size(); ++b) {
      const auto& x = samplers[a];
      const auto& y = samplers[b];
      auto z = [&](const char* value, const char* se) {
        const double combined = std::hypot(x[se].get<double>(), y[se].get<double>());
        return std::abs(x[value].get<double>() - y[value].get<double>()) / combined;
      };
      const double z_mean = z("mean", "mean_se");
      const double z_var = z("variance", "variance_se");
      const bool agree = z_mean <= ex.tolerance_se && z_var <= ex.tolerance_se;
      all_agree = all_agree && agree;
      pairs.push_back(Json{{"a", x["sampler"]},
                           {"b", y["sampler"]},
                           {"z_mean", z_mean},
                           {"z_variance", z_var},
                           {"agree", agree}});
    }
  }

  Json table{{"s", S}, {"h", h}, {"samplers", samplers}, {"pairs", pairs}};
  if (auto oracle = problem.model->oracle(problem.observed, problem.kernel))
    table["oracle"] = Json{{"mean", oracle->mean()}, {"variance", oracle->variance()}};
  return table;
}

} // namespace

Json ExperimentReport::to_json() const {
  Json j;
  j["experiment"] = name;
  j["passed"] = passed;
  for (const auto& [key, value] : details.items()) j[key] = value;
  return j;
}

ExperimentReport experiment_equivalence(const RunConfig& config, int threads) {
  validate(config);
  const auto& ex = config.experiment;
  const Problem problem = make_problem(config);
  const auto proposal = make_mcmc_settings(config, *problem.model).proposal;

  Worst worst;
  Json mcmc_runs = Json::array(), smc_runs = Json::array();
  for (std::size_t i = 0; i < ex.cross_s.size(); ++i) {
    const std::size_t S = ex.cross_s[i];
    mcmc_runs.push_back(mcmc_dual_bookkeeping(problem, S, ex.equivalence_iterations, proposal,
                                              derive_seed(config.run.seed, 1, i), worst));
    smc_runs.push_back(smc_dual_bookkeeping(problem, S, ex.equivalence_iterations, config,
                                            derive_seed(config.run.seed, 2, i), worst));
  }

  bool agree = true;
  Json tables = Json::array();
  for (std::size_t S : ex.cross_s) tables.push_back(cross_sampler_table(config, S, threads, agree));

  ExperimentReport report{"equivalence", worst.value == 0.0 && agree, {}};
  report.details["max_discrepancy"] = worst.value;
  if (worst.value != 0.0) report.details["offending"] = worst.where;
  report.details["mcmc"] = mcmc_runs;
  report.details["smc"] = smc_runs;
  report.details["cross_sampler"] = tables;
  report.details["cross_sampler_agree"] = agree;
  report.details["provenance"] = provenance_json(config);
  return report;
}

ExperimentReport experiment_mcwm_bias(const RunConfig& config, int threads) {
  validate(config);
  const auto& ex = config.experiment;
  if (ex.bias_s.size() < 2) throw ConfigError("bias_s needs at least two values");
  const Problem problem = make_problem(config);
  const auto oracle = require_oracle(*problem.model, problem.observed, problem.kernel);
  auto cdf = [&oracle](double x) { return oracle.cdf(x); };

  std::vector<double> log_s;
  for (std::size_t S : ex.bias_s) log_s.push_back(std::log10(static_cast<double>(S)));

  ExperimentReport report{"mcwm-bias", true, {}};
  Json rows = Json::array();
  std::vector<std::vector<std::vector<double>>> all_ks;
  for (McmcVariant variant : {McmcVariant::fresh_denominator, McmcVariant::carried_bundle}) {
    const std::size_t n_s = ex.bias_s.size();
    std::vector<std::vector<double>> ks(n_s, std::vector<double>(ex.bias_chains));
    std::vector<double> acceptance(n_s * ex.bias_chains);
    parallel_for(n_s * ex.bias_chains, threads, [&](std::size_t job) {
      const std::size_t g = job / ex.bias_chains, c = job % ex.bias_chains;
      McmcSettings s = make_mcmc_settings(config, *problem.model);
      s.S = ex.bias_s[g];
      s.variant = variant;
      s.n_iter = ex.bias_iter;
      s.burn_in = ex.bias_iter / 10;
      s.thin = 1;
      RandomStream rng(config.run.seed, StreamTag::mcmc,
                       (static_cast<std::uint64_t>(variant) << 40) |
                           (static_cast<std::uint64_t>(ex.bias_s[g]) << 20) | c);
      const auto out = run_mcmc(problem, s, rng);
      const auto samples = samples_of(out);
      const auto values = samples.column(0);
      ks[g][c] = ks_statistic(values, samples.weights(), cdf);
      acceptance[job] = out.acceptance_rate();
    });

    RandomStream boot(config.run.seed, StreamTag::bootstrap, static_cast<std::uint64_t>(variant));
    const Interval diff = bootstrap_mean_difference(ks.front(), ks.back(), 1.0 - ex.alpha,
                                                    ex.bootstrap, boot);
    const Interval slope = bootstrap_slope(log_s, ks, 1.0 - ex.alpha, ex.bootstrap, boot);
    std::vector<double> mean_ks;
    for (const auto& g : ks) mean_ks.push_back(mean(g));

    Json per_s = Json::array();
    for (std::size_t g = 0; g < n_s; ++g) {
      const auto first = acceptance.begin() + static_cast<std::ptrdiff_t>(g * ex.bias_chains);
      std::vector<double> acc(first, first + static_cast<std::ptrdiff_t>(ex.bias_chains));
      per_s.push_back(Json{{"s", ex.bias_s[g]},
                           {"mean_ks", mean_ks[g]},
                           {"ks", ks[g]},
                           {"acceptance_rate", mean(acc)}});
    }
    const bool fresh = variant == McmcVariant::fresh_denominator;
    // Fresh: the first-vs-last difference is positive. Carried: no trend.
    const bool verdict = fresh ? diff.lo > 0.0 : diff.contains(0.0) && slope.contains(0.0);
    report.passed = report.passed && verdict;
    Json row{{"variant", to_string(variant)}};
    if (fresh) row["variant_label"] = "biased reference variant";
    row["per_s"] = per_s;
    row["difference"] = Json{{"s_first", ex.bias_s.front()},
                             {"s_last", ex.bias_s.back()},
                             {"estimate", mean_ks.front() - mean_ks.back()},
                             {"ci", {diff.lo, diff.hi}}};
    row["slope_log10_s"] = Json{{"estimate", least_squares_slope(log_s, mean_ks)},
                                {"ci", {slope.lo, slope.hi}}};
    row[fresh ? "decreasing" : "no_trend"] = verdict;
    rows.push_back(row);
    all_ks.push_back(std::move(ks));
  }

  const double fresh_last = mean(all_ks[0].back()), carried_last = mean(all_ks[1].back());
  const double ratio = std::max(fresh_last, carried_last) / std::min(fresh_last, carried_last);
  const bool converged = ratio <= 2.0;
  report.passed = report.passed && converged;
  report.details["confidence"] = 1.0 - ex.alpha;
  report.details["rows"] = rows;
  report.details["large_s"] = Json{{"s", ex.bias_s.back()}, {"ks_ratio", ratio}, {"within_2x", converged}};
  report.details["provenance"] = provenance_json(config);
  return report;
}

ExperimentReport experiment_s_invariance(const RunConfig& config, int threads) {
  validate(config);
  const auto& ex = config.experiment;
  if (ex.invariance_s.empty()) throw ConfigError("invariance_s is empty");
  const Problem problem = make_problem(config);
  if (problem.model->param_dim() != 1)
    throw ConfigError("s-invariance compares scalar parameters");
  const std::size_t n_s = ex.invariance_s.size();
  const std::uint64_t seed = config.run.seed;

  // Slots 0..n_s-1 rejection, n_s..2n_s-1 MCMC, 2n_s null-control rejection.
  std::vector<std::vector<double>> populations(2 * n_s + 1);
  std::vector<double> acceptance(2 * n_s + 1);
  parallel_for(populations.size(), threads, [&](std::size_t job) {
    if (job < n_s || job == 2 * n_s) {
      RejectionSettings s = make_rejection_settings(config);
      s.S = ex.invariance_s[job == 2 * n_s ? 0 : job];
      s.n_accept = ex.invariance_samples;
      s.threads = 1;
      const auto out = run_rejection(problem, s, derive_seed(seed, 10, static_cast<std::uint32_t>(job)));
      populations[job] = samples_of(out).column(0);
      acceptance[job] = out.acceptance_rate();
    } else {
      McmcSettings s = make_mcmc_settings(config, *problem.model);
      s.S = ex.invariance_s[job - n_s];
      s.variant = McmcVariant::carried_bundle;
      s.thin = ex.invariance_thin;
      s.burn_in = ex.invariance_samples * ex.invariance_thin / 10;
      s.n_iter = s.burn_in + ex.invariance_samples * ex.invariance_thin;
      RandomStream rng(derive_seed(seed, 11, static_cast<std::uint32_t>(job)), StreamTag::mcmc, 0);
      const auto out = run_mcmc(problem, s, rng);
      populations[job] = samples_of(out).column(0);
      acceptance[job] = out.acceptance_rate();
    }
  });

  struct Pair {
    std::string sampler;
    std::size_t a, b;
  };
  std::vector<Pair> pairs;
  for (std::size_t i = 0; i < n_s; ++i)
    for (std::size_t j = i + 1; j < n_s; ++j) {
      pairs.push_back({"rejection", i, j});
      pairs.push_back({"mcmc-carried", n_s + i, n_s + j});
    }
  pairs.push_back({"rejection-null", 0, 2 * n_s});

  std::vector<TestResult> results(pairs.size());
  parallel_for(pairs.size(), threads, [&](std::size_t p) {
    RandomStream rng(seed, StreamTag::permutation, p);
    results[p] = ks_permutation_test(populations[pairs[p].a], populations[pairs[p].b],
                                     ex.permutations, rng);
  });

  auto s_of = [&](std::size_t slot) { return ex.invariance_s[slot == 2 * n_s ? 0 : slot % n_s]; };
  ExperimentReport report{"s-invariance", true, {}};
  Json tests = Json::array();
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const bool pass = results[p].p_value >= ex.alpha;
    report.passed = report.passed && pass;
    tests.push_back(Json{{"sampler", pairs[p].sampler},
                         {"s_a", s_of(pairs[p].a)},
                         {"s_b", s_of(pairs[p].b)},
                         {"statistic", results[p].statistic},
                         {"p_value", results[p].p_value},
                         {"pass", pass}});
  }
  Json rates = Json::array();
  for (std::size_t i = 0; i < n_s; ++i)
    rates.push_back(Json{{"s", ex.invariance_s[i]},
                         {"rejection", acceptance[i]},
                         {"mcmc_carried", acceptance[n_s + i]}});
  report.details["alpha"] = ex.alpha;
  report.details["samples"] = ex.invariance_samples;
  report.details["tests"] = tests;
  report.details["acceptance_rates"] = rates;
  report.details["provenance"] = provenance_json(config);
  return report;
}

ExperimentReport run_experiment(const std::string& name, const RunConfig& config, int threads) {
  if (name == "equivalence") return experiment_equivalence(config, threads);
  if (name == "mcwm-bias") return experiment_mcwm_bias(config, threads);
  if (name == "s-invariance") return experiment_s_invariance(config, threads);
  throw ConfigError("unknown experiment '" + name +
                    "' (expected equivalence|mcwm-bias|s-invariance)");
}

} // namespace lfs
