#pragma once

#include <string>

#include "lfs/config.hpp"
#include "lfs/output.hpp"

namespace lfs {

/// Outcome of one headline experiment: a verdict plus a JSON report whose
/// "passed" field repeats the verdict.
struct ExperimentReport {
  std::string name;
  bool passed = false;
  Json details;

  Json to_json() const;
};

/// Dual-bookkeeping check of the MCMC acceptance ratio and the SMC
/// incremental weight (marginal reading vs joint reading, exact equality),
/// plus a cross-sampler moment table at the final SMC bandwidth for each S
/// in experiment.cross_s.
ExperimentReport experiment_equivalence(const RunConfig& config, int threads = 1);

/// Fresh-denominator vs carried-bundle chains over experiment.bias_s: mean KS
/// distance to the oracle per S, bootstrap intervals for the S_first - S_last
/// difference and for the slope over log10 S.
ExperimentReport experiment_mcwm_bias(const RunConfig& config, int threads = 1);

/// Rejection and carried-bundle MCMC populations over experiment.invariance_s
/// compared pairwise by permutation KS tests, with a same-S null control.
ExperimentReport experiment_s_invariance(const RunConfig& config, int threads = 1);

/// Replicates run on `threads` workers; reports do not depend on it.
ExperimentReport run_experiment(const std::string& name, const RunConfig& config, int threads = 1);

} // namespace lfs
