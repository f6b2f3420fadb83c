#include "lfs/smc.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <string>

#include "lfs/errors.hpp"
#include "lfs/parallel.hpp"

namespace lfs {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(std::span<const double> terms) {
  double max_term = kNegInf;
  for (double t : terms) max_term = std::max(max_term, t);
  if (max_term == kNegInf) return kNegInf;
  double sum = 0.0;
  for (double t : terms) sum += std::exp(t - max_term);
  return max_term + std::log(sum);
}

} // namespace

// ---- schedule ---------------------------------------------------------------

BandwidthSchedule::BandwidthSchedule(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw ConfigError("bandwidth schedule is empty");
  for (std::size_t k = 0; k < values_.size(); ++k) {
    if (!(values_[k] > 0.0) || !std::isfinite(values_[k]))
      throw ConfigError("bandwidth schedule values must be positive");
    if (k > 0 && !(values_[k] < values_[k - 1]))
      throw ConfigError("bandwidth schedule must be strictly decreasing");
  }
}

BandwidthSchedule BandwidthSchedule::geometric(double h_start, double h_end, std::size_t steps) {
  if (steps == 0) throw ConfigError("bandwidth schedule needs at least one step");
  if (steps == 1) return BandwidthSchedule({h_end});
  if (!(h_start > h_end)) throw ConfigError("geometric schedule needs h_start > h_end");
  if (!(h_end > 0.0)) throw ConfigError("bandwidth schedule values must be positive");
  std::vector<double> values(steps);
  const double ratio = std::log(h_end / h_start) / static_cast<double>(steps - 1);
  for (std::size_t k = 0; k < steps; ++k) values[k] = h_start * std::exp(ratio * static_cast<double>(k));
  values.front() = h_start;
  values.back() = h_end;
  return BandwidthSchedule(std::move(values));
}

BandwidthSchedule BandwidthSchedule::explicit_values(std::vector<double> values) {
  return BandwidthSchedule(std::move(values));
}

std::string_view to_string(SmcVariant variant) {
  return variant == SmcVariant::joint_mcmc_move ? "joint-move" : "backward";
}

SmcVariant parse_smc_variant(std::string_view name) {
  if (name == "joint-move") return SmcVariant::joint_mcmc_move;
  if (name == "backward") return SmcVariant::backward_kernel;
  throw ConfigError("unknown smc variant '" + std::string(name) + "' (expected joint-move|backward)");
}

std::vector<double> ParticleSystem::weights() const {
  std::vector<double> w(particles.size());
  for (std::size_t i = 0; i < particles.size(); ++i) w[i] = std::exp(particles[i].log_weight);
  return w;
}

// ---- weights ----------------------------------------------------------------

double combine_weight_terms(double log_num, double log_den, double log_backward,
                            double log_forward) {
  if (log_num == kNegInf || log_den == kNegInf) return kNegInf;
  return log_num + log_backward - log_den - log_forward;
}

double incremental_weight_joint(const Particle& prev, const Particle& next, double h_new,
                                double h_prev, const SmoothingKernel& kernel,
                                std::span<const double> observed, const Model& model,
                                double log_backward, double log_forward) {
  const double log_num =
      joint_logdensity_unnorm(next.theta, next.bundle, observed, kernel.with_bandwidth(h_new), model);
  const double log_den =
      joint_logdensity_unnorm(prev.theta, prev.bundle, observed, kernel.with_bandwidth(h_prev), model);
  return combine_weight_terms(log_num, log_den, log_backward, log_forward);
}

double incremental_weight_backward(std::span<const double> theta_new, double log_num_new,
                                   std::span<const ParamVector> prev_thetas,
                                   std::span<const double> prev_weights,
                                   const ProposalSpec& mutation, const Model& model) {
  if (log_num_new == kNegInf) return kNegInf;
  std::vector<double> terms(prev_thetas.size(), kNegInf);
  for (std::size_t i = 0; i < prev_thetas.size(); ++i)
    if (prev_weights[i] > 0.0)
      terms[i] = std::log(prev_weights[i]) + mutation.log_density(prev_thetas[i], theta_new, model);
  const double log_mixture = log_sum_exp(terms);
  assert(log_mixture > kNegInf && "mixture of mutation densities vanished");
  return log_num_new - log_mixture;
}

double ess(std::span<const double> weights) {
  double sum_sq = 0.0;
  for (double w : weights) sum_sq += w * w;
  return sum_sq > 0.0 ? 1.0 / sum_sq : 0.0;
}

std::vector<double> normalize_log_weights(std::span<double> log_weights, std::size_t step) {
  const double log_total = log_sum_exp(log_weights);
  if (log_total == kNegInf || !std::isfinite(log_total))
    throw WeightCollapse("all particle weights are zero at step " + std::to_string(step), step);
  std::vector<double> w(log_weights.size());
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = std::exp(log_weights[i] - log_total);
    total += w[i];
  }
  // Second pass removes the rounding left by the log-domain normalization.
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] /= total;
    log_weights[i] = w[i] > 0.0 ? std::log(w[i]) : kNegInf;
  }
  return w;
}

std::vector<std::size_t> systematic_ancestors(std::span<const double> weights, double u) {
  const std::size_t n = weights.size();
  std::vector<std::size_t> ancestors(n);
  double total = 0.0;
  for (double w : weights) total += w;
  const double scale = static_cast<double>(n) / total;
  double cumulative = weights.empty() ? 0.0 : weights[0] * scale;
  std::size_t i = 0;
  for (std::size_t j = 0; j < n; ++j) {
    const double position = u + static_cast<double>(j);
    while (cumulative <= position && i + 1 < n) cumulative += weights[++i] * scale;
    ancestors[j] = i;
  }
  return ancestors;
}

ParticleSystem resample_systematic(const ParticleSystem& system, RandomStream& rng) {
  const auto w = system.weights();
  double total = 0.0;
  for (double x : w) total += x;
  if (!(total > 0.0))
    throw WeightCollapse("cannot resample: all weights are zero at step " +
                             std::to_string(system.step),
                         system.step);
  const auto ancestors = systematic_ancestors(w, rng.uniform());
  ParticleSystem out;
  out.step = system.step;
  out.particles.reserve(ancestors.size());
  const double log_uniform = -std::log(static_cast<double>(ancestors.size()));
  for (std::size_t a : ancestors) {
    out.particles.push_back(system.particles[a]);
    out.particles.back().log_weight = log_uniform;
  }
  out.ess = static_cast<double>(out.particles.size());
  return out;
}

// ---- sampler ----------------------------------------------------------------

namespace {

struct StepContext {
  const Problem& problem;
  const SmcSettings& settings;
  std::uint64_t seed;
};

double reweight_and_normalize(ParticleSystem& system, std::size_t step) {
  std::vector<double> log_w(system.particles.size());
  for (std::size_t i = 0; i < log_w.size(); ++i) log_w[i] = system.particles[i].log_weight;
  const auto w = normalize_log_weights(log_w, step);
  for (std::size_t i = 0; i < log_w.size(); ++i) system.particles[i].log_weight = log_w[i];
  return ess(w);
}

// Drops particles whose normalized weight is below c/N with probability
// 1 - w N / c and lifts the survivors to c/N, which keeps every weight
// unchanged in expectation. Dropped particles get zero weight and are replaced
// at the next resampling.
std::size_t apply_rejection_threshold(ParticleSystem& system, double c, const StepContext& ctx) {
  const double n = static_cast<double>(system.particles.size());
  const double floor = c / n;
  std::size_t dropped = 0;
  for (std::size_t i = 0; i < system.particles.size(); ++i) {
    Particle& p = system.particles[i];
    const double w = std::exp(p.log_weight);
    if (w >= floor || w == 0.0) continue;
    RandomStream rng(ctx.seed, StreamTag::smc_threshold, i, static_cast<std::uint32_t>(system.step));
    if (rng.uniform() < 1.0 - w / floor) {
      p.log_weight = kNegInf;
      ++dropped;
    } else {
      p.log_weight = std::log(floor);
    }
  }
  return dropped;
}

void initialize(ParticleSystem& system, const StepContext& ctx, double h) {
  const Problem& problem = ctx.problem;
  const SmoothingKernel kernel = problem.kernel.with_bandwidth(h);
  const std::size_t n = ctx.settings.N;
  system.particles.assign(n, Particle{});
  system.step = 1;
  parallel_for(n, ctx.settings.threads, [&](std::size_t i) {
    RandomStream rng(ctx.seed, StreamTag::smc_init, i, 1);
    Particle& p = system.particles[i];
    p.theta = problem.model->prior_sample(rng);
    auto estimate = marginal_logestimate(p.theta, ctx.settings.S, problem.observed, kernel,
                                         *problem.model, rng);
    p.bundle = std::move(estimate.bundle);
    p.log_num = estimate.log_value;
    // Prior proposal: the importance weight is the pooled kernel.
    p.log_weight = kernel.log_pooled_evaluate(problem.observed, p.bundle);
  });
}

void joint_move_step(ParticleSystem& system, const StepContext& ctx, double h_new, double h_prev,
                     SmcStepReport& report, const SmcWeightObserver& on_weight) {
  const Problem& problem = ctx.problem;
  const Model& model = *problem.model;
  const SmoothingKernel kernel = problem.kernel.with_bandwidth(h_new);
  const std::size_t n = system.particles.size();
  const std::size_t step = system.step;

  std::vector<double> increments(n);
  parallel_for(n, ctx.settings.threads, [&](std::size_t i) {
    const Particle& p = system.particles[i];
    increments[i] =
        incremental_weight_joint(p, p, h_new, h_prev, problem.kernel, problem.observed, model);
  });
  for (std::size_t i = 0; i < n; ++i) {
    Particle& p = system.particles[i];
    if (on_weight) on_weight({step, i, p, p, h_new, h_prev, increments[i]});
    p.log_weight = p.log_weight == kNegInf ? kNegInf : p.log_weight + increments[i];
    p.log_num = joint_logdensity_unnorm(p.theta, p.bundle, problem.observed, kernel, model);
  }
  report.ess = reweight_and_normalize(system, step);
  if (report.ess < ctx.settings.ess_threshold * static_cast<double>(n)) {
    RandomStream rng(ctx.seed, StreamTag::smc_resample, 0, static_cast<std::uint32_t>(step));
    system = resample_systematic(system, rng);
    report.resampled = true;
  }

  const Problem at_h = problem.at_bandwidth(h_new);
  std::vector<char> accepted(n, 0);
  parallel_for(n, ctx.settings.threads, [&](std::size_t i) {
    Particle& p = system.particles[i];
    RandomStream rng(ctx.seed, StreamTag::smc_move, i, static_cast<std::uint32_t>(step));
    ChainState state{std::move(p.theta), std::move(p.bundle), p.log_num};
    accepted[i] = mcmc_step(state, at_h, ctx.settings.S, McmcVariant::carried_bundle,
                            ctx.settings.mutation, rng)
                      ? 1
                      : 0;
    p.theta = std::move(state.theta);
    p.bundle = std::move(state.bundle);
    p.log_num = state.log_num;
  });
  std::size_t total = 0;
  for (char a : accepted) total += static_cast<std::size_t>(a);
  report.acceptance_rate = static_cast<double>(total) / static_cast<double>(n);
}

void backward_step(ParticleSystem& system, const StepContext& ctx, double h_new,
                   SmcStepReport& report) {
  const Problem& problem = ctx.problem;
  const Model& model = *problem.model;
  const SmoothingKernel kernel = problem.kernel.with_bandwidth(h_new);
  const std::size_t n = system.particles.size();
  const std::size_t step = system.step;

  std::vector<ParamVector> prev_thetas(n);
  std::vector<double> prev_weights(n);
  for (std::size_t i = 0; i < n; ++i) {
    prev_thetas[i] = system.particles[i].theta;
    prev_weights[i] = std::exp(system.particles[i].log_weight);
  }

  std::vector<Particle> next(n);
  parallel_for(n, ctx.settings.threads, [&](std::size_t i) {
    const Particle& p = system.particles[i];
    Particle& q = next[i];
    RandomStream rng(ctx.seed, StreamTag::smc_move, i, static_cast<std::uint32_t>(step));
    q.theta = ctx.settings.mutation.propose(p.theta, model, rng);
    if (model.prior_logdensity(q.theta) == -std::numeric_limits<double>::infinity()) {
      q.log_num = kNegInf;
      q.log_weight = kNegInf;
      return;
    }
    auto estimate = marginal_logestimate(q.theta, ctx.settings.S, problem.observed, kernel, model, rng);
    q.bundle = std::move(estimate.bundle);
    q.log_num = estimate.log_value;
    q.log_weight = p.log_weight + incremental_weight_backward(q.theta, q.log_num, prev_thetas,
                                                              prev_weights, ctx.settings.mutation,
                                                              model);
  });
  system.particles = std::move(next);
  report.ess = reweight_and_normalize(system, step);
}

} // namespace

SmcOutput run_smc(const Problem& problem, const BandwidthSchedule& schedule,
                  const SmcSettings& settings, std::uint64_t seed, const SmcStepObserver& on_step,
                  const SmcWeightObserver& on_weight) {
  if (settings.N < 2) throw ConfigError("SMC needs at least 2 particles");
  if (settings.S == 0) throw ConfigError("S must be at least 1");
  if (!(settings.ess_threshold > 0.0 && settings.ess_threshold <= 1.0))
    throw ConfigError("ess_threshold must lie in (0, 1]");
  if (settings.rejection_threshold) {
    if (settings.variant != SmcVariant::backward_kernel)
      throw ConfigError("rejection threshold is only valid for the backward variant");
    const double c = *settings.rejection_threshold;
    if (!(c > 0.0 && c < 1.0)) throw ConfigError("rejection threshold must lie in (0, 1)");
  }

  const StepContext ctx{problem, settings, seed};
  const double n = static_cast<double>(settings.N);
  SmcOutput out;
  out.variant = settings.variant;
  ParticleSystem& system = out.system;

  for (std::size_t k = 1; k <= schedule.size(); ++k) {
    const double h = schedule[k - 1];
    SmcStepReport report{k, h, 0.0, false, 0.0, 0};

    if (k == 1) {
      initialize(system, ctx, h);
      report.ess = reweight_and_normalize(system, k);
    } else if (settings.variant == SmcVariant::joint_mcmc_move) {
      system.step = k;
      joint_move_step(system, ctx, h, schedule[k - 2], report, on_weight);
    } else {
      system.step = k;
      if (system.ess < settings.ess_threshold * n) {
        RandomStream rng(seed, StreamTag::smc_resample, 0, static_cast<std::uint32_t>(k));
        system = resample_systematic(system, rng);
        report.resampled = true;
      }
      backward_step(system, ctx, h, report);
    }

    if (settings.rejection_threshold) {
      report.dropped = apply_rejection_threshold(system, *settings.rejection_threshold, ctx);
      if (report.dropped > 0) report.ess = reweight_and_normalize(system, k);
    }
    system.ess = report.ess;
    out.steps.push_back(report);
    if (on_step) on_step(report);
  }
  return out;
}

} // namespace lfs
