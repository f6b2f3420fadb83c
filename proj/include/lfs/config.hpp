#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lfs/mcmc.hpp"
#include "lfs/model.hpp"
#include "lfs/rejection.hpp"
#include "lfs/smc.hpp"
#include "lfs/target.hpp"

namespace lfs {

// Configuration file: INI text with one section per module. Every key has a
// default; unknown sections or keys are rejected. Optional keys that are unset
// are omitted when the config is written, so parse(write(c)) == c. The worker
// count is not part of a config: it never changes results.

struct RunSection {
  std::uint64_t seed = 42;
  std::size_t s = 1;
  std::string out;     // samples CSV path; empty = <output dir>/<command>.csv
  std::string summary; // JSON summary path; empty = samples path with .json
  bool operator==(const RunSection&) const = default;
};

struct ModelSection {
  std::string name = "normal-mean";
  double prior_mean = 0.0;
  double prior_sd = 1.0;
  double tau = 1.0;
  int trials = 20;
  std::optional<double> observed; // default 0 (normal-mean) or 7 (bernoulli-count)
  bool operator==(const ModelSection&) const = default;
};

struct KernelSection {
  std::string kind = "gaussian";
  double h = 1.0;
  std::vector<double> weights; // empty = Euclidean distance
  bool operator==(const KernelSection&) const = default;
};

struct RejectionSection {
  std::size_t n_accept = 10000;
  std::uint64_t budget = 100'000'000;
  std::size_t chunk_size = 4096;
  bool emit_bundles = false;
  bool operator==(const RejectionSection&) const = default;
};

struct McmcSection {
  std::string variant = "carried";
  std::string proposal = "random-walk";
  std::size_t n_iter = 100000;
  std::optional<std::size_t> burn_in; // default n_iter / 10
  std::size_t thin = 1;
  std::vector<double> step_sd;        // empty = prior sd / 2
  std::vector<double> init;           // empty = draw from the prior
  bool operator==(const McmcSection&) const = default;
};

struct SmcSection {
  std::string variant = "joint-move";
  double h_start = 2.0;
  double h_end = 0.25;
  std::size_t steps = 15;
  std::size_t particles = 2000;
  double ess_threshold = 0.5;
  std::optional<double> reject_threshold;
  std::vector<double> step_sd; // empty = prior sd / 2
  bool operator==(const SmcSection&) const = default;
};

struct ExperimentSection {
  double alpha = 0.01;          // significance level for every test
  double tolerance_se = 3.0;    // agreement tolerance in combined standard errors
  std::size_t permutations = 999;
  std::size_t bootstrap = 4000;
  // equivalence
  std::size_t equivalence_iterations = 10000;
  std::vector<std::size_t> cross_s{1, 5};
  std::size_t replicates = 40;
  std::size_t cross_samples = 5000;
  std::size_t cross_mcmc_iter = 50000;
  std::size_t cross_particles = 1000;
  // mcwm-bias
  std::vector<std::size_t> bias_s{1, 10, 100};
  std::size_t bias_chains = 10;
  std::size_t bias_iter = 100000;
  // s-invariance
  std::vector<std::size_t> invariance_s{1, 5, 25};
  std::size_t invariance_samples = 20000;
  std::size_t invariance_thin = 50;
  bool operator==(const ExperimentSection&) const = default;
};

struct RunConfig {
  RunSection run;
  ModelSection model;
  KernelSection kernel;
  RejectionSection rejection;
  McmcSection mcmc;
  SmcSection smc;
  ExperimentSection experiment;
  bool operator==(const RunConfig&) const = default;
};

/// Parses INI text. Throws ConfigError on malformed input or unknown keys.
RunConfig parse_config(std::string_view text);
/// Canonical INI text.
std::string write_config(const RunConfig& config);
/// Reads a config file, or the config embedded in a CSV (leading "# " lines)
/// or JSON summary ("provenance.config") written by this tool.
RunConfig load_config(const std::string& path);
/// Semantic checks beyond parsing; throws ConfigError.
void validate(const RunConfig& config);

std::shared_ptr<const Model> make_model(const ModelSection& section);
SummaryVector observed_summary(const ModelSection& section);
SmoothingKernel make_kernel(const KernelSection& section);
Problem make_problem(const RunConfig& config);
ProposalSpec make_proposal(const std::string& kind, const std::vector<double>& step_sd,
                           const Model& model);
RejectionSettings make_rejection_settings(const RunConfig& config, int threads = 1);
McmcSettings make_mcmc_settings(const RunConfig& config, const Model& model);
SmcSettings make_smc_settings(const RunConfig& config, const Model& model, int threads = 1);
BandwidthSchedule make_schedule(const SmcSection& section);

/// Output directory from LFS_OUTPUT_DIR, else ".".
std::string default_output_dir();

} // namespace lfs
