#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "lfs/target.hpp"

namespace lfs {

enum class McmcVariant {
  /// Pseudo-marginal / joint-space sampler: the current bundle and its cached
  /// numerator are carried with the state and reused in the denominator.
  carried_bundle,
  /// Biased reference variant ("Monte Carlo within Metropolis"): the
  /// denominator is re-estimated from a fresh bundle every iteration.
  fresh_denominator,
};

std::string_view to_string(McmcVariant variant);
McmcVariant parse_mcmc_variant(std::string_view name);

/// Parameter proposal q(theta_n, theta).
struct ProposalSpec {
  enum class Kind { random_walk_gaussian, independence_prior };

  Kind kind = Kind::random_walk_gaussian;
  std::vector<double> step_sd;

  static ProposalSpec random_walk(std::vector<double> step_sd);
  static ProposalSpec independence_prior();

  ParamVector propose(std::span<const double> current, const Model& model, RandomStream& rng) const;
  /// log q(from, to).
  double log_density(std::span<const double> from, std::span<const double> to,
                     const Model& model) const;
  /// log q(to, from) - log q(from, to); zero for the symmetric random walk.
  double log_reverse_ratio(std::span<const double> from, std::span<const double> to,
                           const Model& model) const;
};

/// Metropolis-Hastings log acceptance ratio
///
///   log_num_prop - log_num_curr + log q(prop -> curr) - log q(curr -> prop)
///
/// where log_num = log[K~_h pi(theta)]. Read with log_num as the log of the
/// marginal estimate pi_hat_M this is the marginal-target ratio; read as the
/// joint density with prod f cancelled against the bundle proposal it is the
/// joint-target ratio. Both readings go through this one function.
///
/// Returns -inf when the proposed numerator is zero (including the case where
/// both numerators are zero, which is rejected to keep the chain in place)
/// and +inf when only the current numerator is zero.
double acceptance_logratio(double log_num_prop, double log_num_curr,
                           std::span<const double> theta_prop, std::span<const double> theta_curr,
                           const ProposalSpec& proposal, const Model& model);

/// Chain state (theta_n, t_n^{1:S}) with log_num = log[K~_h(t_y, t_n^{1:S}) pi(theta_n)].
struct ChainState {
  ParamVector theta;
  AuxiliaryBundle bundle;
  double log_num = 0.0;
};

/// What one iteration saw; passed to an optional observer for instrumentation.
struct McmcTransition {
  std::size_t iteration;
  const ChainState& current;  ///< state used in the denominator
  const ChainState& proposed;
  double log_ratio;
  bool accepted;
};

using McmcObserver = std::function<void(const McmcTransition&)>;

struct McmcSettings {
  std::size_t S = 1;
  McmcVariant variant = McmcVariant::carried_bundle;
  ProposalSpec proposal;
  std::size_t n_iter = 10000;
  std::size_t burn_in = 1000;
  std::size_t thin = 1;
  std::optional<ParamVector> init;
  std::uint64_t init_budget = 1'000'000;
};

struct McmcRecord {
  std::size_t iteration;
  ParamVector theta;
  bool accepted;
  double log_num;
};

struct McmcOutput {
  McmcVariant variant = McmcVariant::carried_bundle;
  std::vector<McmcRecord> records; ///< post burn-in, thinned
  std::size_t iterations = 0;
  std::size_t accepted = 0;

  double acceptance_rate() const {
    return iterations == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(iterations);
  }
};

/// Starting state. Without init, draws from the prior until the pooled kernel
/// is positive; with init, re-simulates the bundle at init until it is.
/// Throws BudgetExhausted after init_budget attempts.
ChainState initialize_chain(const Problem& problem, std::size_t S,
                            const std::optional<ParamVector>& init, std::uint64_t init_budget,
                            RandomStream& rng);

/// One LF-MCMC iteration. On rejection the state (theta, bundle, log_num) is untouched.
bool mcmc_step(ChainState& state, const Problem& problem, std::size_t S, McmcVariant variant,
               const ProposalSpec& proposal, RandomStream& rng, std::size_t iteration = 0,
               const McmcObserver& observer = {});

McmcOutput run_mcmc(const Problem& problem, const McmcSettings& settings, RandomStream& rng,
                    const McmcObserver& observer = {});

/// Independent chains on substreams (seed, mcmc, chain), optionally in parallel.
std::vector<McmcOutput> run_mcmc_chains(const Problem& problem, const McmcSettings& settings,
                                        std::uint64_t seed, std::size_t n_chains, int threads,
                                        std::uint64_t first_chain = 0);

} // namespace lfs
