#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"

#include "lfs/config.hpp"
#include "lfs/mcmc.hpp"
#include "lfs/model.hpp"
#include "lfs/rejection.hpp"
#include "lfs/smc.hpp"
#include "lfs/stats.hpp"

namespace lfs {

using Json = nlohmann::ordered_json;

inline constexpr std::string_view kCodeVersion = "lfs 0.1.0";

// CSV files start with the producing config as "# " comment lines, then a
// header row. Numbers use the shortest round-trip decimal form.

std::string config_preamble(const RunConfig& config);

std::string rejection_csv(const RejectionOutput& out, const RunConfig& config);
/// Sidecar with columns sample,s,t_0..t_{d-1}: one row per accepted summary.
std::string bundles_csv(const RejectionOutput& out, const RunConfig& config);
std::string mcmc_csv(const McmcOutput& out, const RunConfig& config);
std::string smc_csv(const SmcOutput& out, const RunConfig& config);

WeightedSamples samples_of(const RejectionOutput& out);
WeightedSamples samples_of(const McmcOutput& out);
WeightedSamples samples_of(const SmcOutput& out);

/// Loads theta_* columns (and a weight column, if present) from a CSV
/// written by this tool.
WeightedSamples read_samples_csv(const std::string& path);

Json provenance_json(const RunConfig& config);
/// n, mean, variance, and the KS statistic against the oracle when one exists.
Json sample_diagnostics(const WeightedSamples& samples, const std::optional<AnalyticOracle>& oracle);

std::string dump(const Json& doc);
void write_text(const std::string& path, const std::string& content);

} // namespace lfs
