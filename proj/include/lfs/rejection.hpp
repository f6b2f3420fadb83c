#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "lfs/target.hpp"

namespace lfs {

struct RejectionSettings {
  std::size_t S = 1;
  std::size_t n_accept = 1000;
  std::uint64_t budget = 100'000'000;
  /// Proposals per substream; part of the output's identity, not a tuning knob
  /// for parallelism.
  std::size_t chunk_size = 4096;
  int threads = 1;
  /// Called after every batch of chunks with (proposals so far, accepted so far).
  std::function<void(std::uint64_t, std::size_t)> progress;
};

struct RejectionOutput {
  std::vector<WeightedParam> accepted;
  std::uint64_t proposals_used = 0;

  double acceptance_rate() const {
    return proposals_used == 0 ? 0.0
                               : static_cast<double>(accepted.size()) /
                                     static_cast<double>(proposals_used);
  }
};

/// Likelihood-free rejection sampling with S auxiliary datasets per proposal.
///
/// Each proposal draws theta from the prior and S summaries from the model,
/// and is accepted with probability K~_h(t_y, t^{1:S}) / K_h(0). Accepted
/// (theta, bundle) pairs are exact draws from the joint target; their theta
/// components are exact draws from the smoothed marginal posterior.
///
/// Proposals are grouped into chunks of chunk_size, chunk c using substream
/// (seed, rejection, c). Chunks are merged in order and the output is cut at
/// the n_accept-th acceptance, so the result does not depend on threads.
///
/// Throws BudgetExhausted if n_accept acceptances are not reached within
/// budget proposals.
RejectionOutput run_rejection(const Problem& problem, const RejectionSettings& settings,
                              std::uint64_t seed);

} // namespace lfs
