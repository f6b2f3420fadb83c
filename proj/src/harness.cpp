#include "lfs/harness.hpp"

#include <filesystem>

#include "lfs/errors.hpp"

namespace lfs {

namespace {

std::optional<AnalyticOracle> try_oracle(const Problem& problem) {
  if (problem.model->param_dim() != 1) return std::nullopt;
  return problem.model->oracle(problem.observed, problem.kernel);
}

Json base_summary(std::string_view command, const RunConfig& config) {
  Json j;
  j["command"] = command;
  j["model"] = config.model.name;
  j["kernel"] = config.kernel.kind;
  j["s"] = config.run.s;
  return j;
}

} // namespace

RunOutput run_reject_command(const RunConfig& config, int threads,
                             const std::function<void(std::uint64_t, std::size_t)>& progress) {
  validate(config);
  const Problem problem = make_problem(config);
  auto settings = make_rejection_settings(config, threads);
  settings.progress = progress;
  const auto result = run_rejection(problem, settings, config.run.seed);

  RunOutput out{"reject", samples_of(result), base_summary("reject", config), rejection_csv(result, config), {}};
  if (config.rejection.emit_bundles) out.sidecar_csv = bundles_csv(result, config);
  out.summary["h"] = config.kernel.h;
  out.summary["proposals_used"] = result.proposals_used;
  out.summary["acceptance_rate"] = result.acceptance_rate();
  out.summary["diagnostics"] = sample_diagnostics(out.samples, try_oracle(problem));
  out.summary["provenance"] = provenance_json(config);
  return out;
}

RunOutput run_mcmc_command(const RunConfig& config) {
  validate(config);
  const Problem problem = make_problem(config);
  const auto settings = make_mcmc_settings(config, *problem.model);
  RandomStream rng(config.run.seed, StreamTag::mcmc, 0);
  const auto result = run_mcmc(problem, settings, rng);

  std::string csv = mcmc_csv(result, config);
  RunOutput out{"mcmc", samples_of(result), base_summary("mcmc", config), {}, {}};
  out.summary["h"] = config.kernel.h;
  out.summary["variant"] = to_string(settings.variant);
  if (settings.variant == McmcVariant::fresh_denominator) {
    out.summary["variant_label"] = "biased reference variant";
    csv = "# ; biased reference variant\n" + csv;
  }
  out.csv = std::move(csv);
  out.summary["iterations"] = result.iterations;
  out.summary["burn_in"] = settings.burn_in;
  out.summary["thin"] = settings.thin;
  out.summary["acceptance_rate"] = result.acceptance_rate();
  out.summary["diagnostics"] = sample_diagnostics(out.samples, try_oracle(problem));
  out.summary["provenance"] = provenance_json(config);
  return out;
}

RunOutput run_smc_command(const RunConfig& config, int threads) {
  validate(config);
  const Problem problem = make_problem(config);
  const auto settings = make_smc_settings(config, *problem.model, threads);
  const auto schedule = make_schedule(config.smc);
  const auto result = run_smc(problem, schedule, settings, config.run.seed);

  RunOutput out{"smc", samples_of(result), base_summary("smc", config), smc_csv(result, config), {}};
  out.summary["variant"] = to_string(settings.variant);
  out.summary["particles"] = settings.N;
  out.summary["schedule"] = schedule.values();
  Json ess = Json::array(), acceptance = Json::array(), resampled = Json::array(),
       dropped = Json::array();
  for (const auto& step : result.steps) {
    ess.push_back(step.ess);
    acceptance.push_back(step.acceptance_rate);
    if (step.resampled) resampled.push_back(step.step);
    dropped.push_back(step.dropped);
  }
  out.summary["ess_trace"] = ess;
  if (settings.variant == SmcVariant::joint_mcmc_move) out.summary["acceptance_trace"] = acceptance;
  if (settings.rejection_threshold) out.summary["dropped_trace"] = dropped;
  out.summary["resample_steps"] = resampled;
  out.summary["diagnostics"] =
      sample_diagnostics(out.samples, try_oracle(problem.at_bandwidth(schedule.values().back())));
  out.summary["provenance"] = provenance_json(config);
  return out;
}

OutputPaths resolve_paths(const RunConfig& config, std::string_view command) {
  namespace fs = std::filesystem;
  OutputPaths paths;
  paths.samples = config.run.out.empty()
                      ? (fs::path(default_output_dir()) / (std::string(command) + ".csv")).string()
                      : config.run.out;
  if (config.run.summary.empty()) {
    fs::path p(paths.samples);
    paths.summary = p.replace_extension(".json").string();
  } else {
    paths.summary = config.run.summary;
  }
  fs::path side(paths.samples);
  paths.sidecar = side.replace_extension(".bundles.csv").string();
  return paths;
}

void write_run_output(const RunOutput& output, const OutputPaths& paths) {
  namespace fs = std::filesystem;
  for (const auto& p : {paths.samples, paths.summary}) {
    const auto parent = fs::path(p).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
  }
  write_text(paths.samples, output.csv);
  write_text(paths.summary, dump(output.summary));
  if (!output.sidecar_csv.empty()) write_text(paths.sidecar, output.sidecar_csv);
}

} // namespace lfs
