#include "lfs/mcmc.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "lfs/errors.hpp"
#include "lfs/parallel.hpp"

namespace lfs {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kPosInf = std::numeric_limits<double>::infinity();
} // namespace

std::string_view to_string(McmcVariant variant) {
  return variant == McmcVariant::carried_bundle ? "carried" : "fresh";
}

McmcVariant parse_mcmc_variant(std::string_view name) {
  if (name == "carried") return McmcVariant::carried_bundle;
  if (name == "fresh") return McmcVariant::fresh_denominator;
  throw ConfigError("unknown mcmc variant '" + std::string(name) + "' (expected carried|fresh)");
}

ProposalSpec ProposalSpec::random_walk(std::vector<double> step_sd) {
  for (double sd : step_sd)
    if (!(sd > 0.0) || !std::isfinite(sd)) throw ConfigError("proposal step sd must be positive");
  return {Kind::random_walk_gaussian, std::move(step_sd)};
}

ProposalSpec ProposalSpec::independence_prior() { return {Kind::independence_prior, {}}; }

ParamVector ProposalSpec::propose(std::span<const double> current, const Model& model,
                                  RandomStream& rng) const {
  if (kind == Kind::independence_prior) return model.prior_sample(rng);
  if (step_sd.size() != current.size())
    throw ConfigError("proposal step sd dimension does not match the parameter dimension");
  ParamVector next(current.begin(), current.end());
  for (std::size_t j = 0; j < next.size(); ++j) next[j] += step_sd[j] * rng.normal();
  return next;
}

double ProposalSpec::log_density(std::span<const double> from, std::span<const double> to,
                                 const Model& model) const {
  if (kind == Kind::independence_prior) return model.prior_logdensity(to);
  double log_q = 0.0;
  for (std::size_t j = 0; j < to.size(); ++j) {
    const double z = (to[j] - from[j]) / step_sd[j];
    log_q += -0.5 * z * z - std::log(step_sd[j]) - 0.5 * std::log(2.0 * std::numbers::pi);
  }
  return log_q;
}

double ProposalSpec::log_reverse_ratio(std::span<const double> from, std::span<const double> to,
                                       const Model& model) const {
  if (kind == Kind::random_walk_gaussian) return 0.0;
  return log_density(to, from, model) - log_density(from, to, model);
}

double acceptance_logratio(double log_num_prop, double log_num_curr,
                           std::span<const double> theta_prop, std::span<const double> theta_curr,
                           const ProposalSpec& proposal, const Model& model) {
  if (log_num_prop == kNegInf) return kNegInf;
  if (log_num_curr == kNegInf) return kPosInf;
  return log_num_prop - log_num_curr + proposal.log_reverse_ratio(theta_curr, theta_prop, model);
}

ChainState initialize_chain(const Problem& problem, std::size_t S,
                            const std::optional<ParamVector>& init, std::uint64_t init_budget,
                            RandomStream& rng) {
  const Model& model = *problem.model;
  if (init && model.prior_logdensity(*init) == kNegInf)
    throw ConfigError("initial parameter lies outside the prior support");
  for (std::uint64_t attempt = 0; attempt < init_budget; ++attempt) {
    ParamVector theta = init ? *init : model.prior_sample(rng);
    auto estimate = marginal_logestimate(theta, S, problem.observed, problem.kernel, model, rng);
    if (estimate.log_value > kNegInf)
      return {std::move(theta), std::move(estimate.bundle), estimate.log_value};
  }
  throw BudgetExhausted("chain initialization found no state with positive pooled kernel in " +
                            std::to_string(init_budget) + " attempts",
                        init_budget, 0);
}

bool mcmc_step(ChainState& state, const Problem& problem, std::size_t S, McmcVariant variant,
               const ProposalSpec& proposal, RandomStream& rng, std::size_t iteration,
               const McmcObserver& observer) {
  const Model& model = *problem.model;
  ParamVector theta = proposal.propose(state.theta, model, rng);
  if (model.prior_logdensity(theta) == kNegInf) return false;

  auto estimate = marginal_logestimate(theta, S, problem.observed, problem.kernel, model, rng);
  ChainState proposed{std::move(theta), std::move(estimate.bundle), estimate.log_value};

  ChainState fresh;
  const ChainState* denominator = &state;
  if (variant == McmcVariant::fresh_denominator) {
    auto redo = marginal_logestimate(state.theta, S, problem.observed, problem.kernel, model, rng);
    fresh = ChainState{state.theta, std::move(redo.bundle), redo.log_value};
    denominator = &fresh;
  }

  const double log_ratio = acceptance_logratio(proposed.log_num, denominator->log_num,
                                               proposed.theta, denominator->theta, proposal, model);
  const bool accept = log_ratio >= 0.0 || std::log(rng.uniform()) < log_ratio;
  if (observer) observer({iteration, *denominator, proposed, log_ratio, accept});
  if (accept) state = std::move(proposed);
  return accept;
}

McmcOutput run_mcmc(const Problem& problem, const McmcSettings& settings, RandomStream& rng,
                    const McmcObserver& observer) {
  if (settings.S == 0) throw ConfigError("S must be at least 1");
  if (settings.n_iter <= settings.burn_in) throw ConfigError("n_iter must exceed burn_in");
  if (settings.thin == 0) throw ConfigError("thin must be at least 1");

  ChainState state = initialize_chain(problem, settings.S, settings.init, settings.init_budget, rng);
  McmcOutput out;
  out.variant = settings.variant;
  out.iterations = settings.n_iter;
  out.records.reserve((settings.n_iter - settings.burn_in) / settings.thin + 1);
  for (std::size_t it = 0; it < settings.n_iter; ++it) {
    const bool accepted = mcmc_step(state, problem, settings.S, settings.variant,
                                    settings.proposal, rng, it, observer);
    out.accepted += accepted ? 1 : 0;
    if (it >= settings.burn_in && (it - settings.burn_in) % settings.thin == 0)
      out.records.push_back({it, state.theta, accepted, state.log_num});
  }
  return out;
}

std::vector<McmcOutput> run_mcmc_chains(const Problem& problem, const McmcSettings& settings,
                                        std::uint64_t seed, std::size_t n_chains, int threads,
                                        std::uint64_t first_chain) {
  std::vector<McmcOutput> chains(n_chains);
  parallel_for(n_chains, threads, [&](std::size_t c) {
    RandomStream rng(seed, StreamTag::mcmc, first_chain + c);
    chains[c] = run_mcmc(problem, settings, rng);
  });
  return chains;
}

} // namespace lfs
