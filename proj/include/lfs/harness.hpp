#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>

#include "lfs/config.hpp"
#include "lfs/output.hpp"
#include "lfs/stats.hpp"

namespace lfs {

/// Samples plus the serialized CSV/JSON artifacts of one sampler run.
struct RunOutput {
  std::string command;
  WeightedSamples samples;
  Json summary;
  std::string csv;
  std::string sidecar_csv; ///< accepted bundles, when requested
};

struct OutputPaths {
  std::string samples;
  std::string summary;
  std::string sidecar;
};

/// threads is the worker count (0 = all cores); outputs do not depend on it.
RunOutput run_reject_command(const RunConfig& config, int threads = 1,
                             const std::function<void(std::uint64_t, std::size_t)>& progress = {});
RunOutput run_mcmc_command(const RunConfig& config);
RunOutput run_smc_command(const RunConfig& config, int threads = 1);

/// Fills in defaults: <LFS_OUTPUT_DIR or .>/<command>.csv, summary next to it
/// with a .json extension, sidecar with a .bundles.csv extension.
OutputPaths resolve_paths(const RunConfig& config, std::string_view command);
void write_run_output(const RunOutput& output, const OutputPaths& paths);

} // namespace lfs
