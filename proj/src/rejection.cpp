#include "lfs/rejection.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lfs/errors.hpp"
#include "lfs/parallel.hpp"

namespace lfs {

namespace {

struct ChunkResult {
  std::vector<std::pair<std::size_t, WeightedParam>> hits; // (offset in chunk, sample)
  std::size_t proposals = 0;
};

ChunkResult run_chunk(const Problem& problem, std::size_t S, std::uint64_t seed,
                      std::uint64_t chunk, std::size_t proposals) {
  const Model& model = *problem.model;
  const double log_sup = problem.kernel.log_sup_value();
  RandomStream rng(seed, StreamTag::rejection, chunk);
  ChunkResult result;
  result.proposals = proposals;
  for (std::size_t p = 0; p < proposals; ++p) {
    ParamVector theta = model.prior_sample(rng);
    AuxiliaryBundle bundle = model.simulate(theta, S, rng);
    const double log_kernel = problem.kernel.log_pooled_evaluate(problem.observed, bundle);
    const double u = rng.uniform();
    if (std::log(u) < log_kernel - log_sup)
      result.hits.push_back({p, WeightedParam{std::move(theta), std::move(bundle), log_kernel}});
  }
  return result;
}

} // namespace

RejectionOutput run_rejection(const Problem& problem, const RejectionSettings& settings,
                              std::uint64_t seed) {
  if (settings.n_accept == 0) throw ConfigError("n_accept must be at least 1");
  if (settings.S == 0) throw ConfigError("S must be at least 1");
  if (settings.chunk_size == 0) throw ConfigError("chunk_size must be at least 1");

  const std::uint64_t chunk = settings.chunk_size;
  const std::size_t batch = static_cast<std::size_t>(std::max(1, settings.threads)) * 4;

  RejectionOutput out;
  out.accepted.reserve(settings.n_accept);
  std::uint64_t next_chunk = 0;
  std::uint64_t consumed = 0;

  while (consumed < settings.budget) {
    std::vector<ChunkResult> results(batch);
    std::vector<std::size_t> sizes(batch, 0);
    for (std::size_t b = 0; b < batch; ++b) {
      const std::uint64_t start = (next_chunk + b) * chunk;
      if (start < settings.budget)
        sizes[b] = static_cast<std::size_t>(std::min(chunk, settings.budget - start));
    }
    parallel_for(batch, settings.threads, [&](std::size_t b) {
      if (sizes[b] > 0) results[b] = run_chunk(problem, settings.S, seed, next_chunk + b, sizes[b]);
    });

    for (std::size_t b = 0; b < batch && sizes[b] > 0; ++b) {
      for (auto& [offset, sample] : results[b].hits) {
        out.accepted.push_back(std::move(sample));
        if (out.accepted.size() == settings.n_accept) {
          out.proposals_used = consumed + offset + 1;
          return out;
        }
      }
      consumed += results[b].proposals;
    }
    next_chunk += batch;
    if (settings.progress) settings.progress(consumed, out.accepted.size());
  }

  out.proposals_used = consumed;
  throw BudgetExhausted("rejection sampler exhausted its budget of " +
                            std::to_string(settings.budget) + " proposals with " +
                            std::to_string(out.accepted.size()) + " of " +
                            std::to_string(settings.n_accept) + " acceptances",
                        consumed, out.accepted.size());
}

} // namespace lfs
