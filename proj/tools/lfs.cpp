// lfs: command-line front end for the likelihood-free samplers and the
// experiment harness. Exit codes: 0 success, 1 statistical failure,
// 2 configuration error, 3 budget exhaustion.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "lfs/errors.hpp"
#include "lfs/experiments.hpp"
#include "lfs/harness.hpp"

namespace {

constexpr int kExitStatistical = 1;
constexpr int kExitConfig = 2;
constexpr int kExitBudget = 3;

// Flag values; set ones override the config file.
struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::size_t> s;
  std::optional<std::string> out;
  std::optional<std::string> summary;
  std::optional<std::string> model;
  std::optional<double> observed;
  std::optional<std::string> kernel;
  std::optional<double> h;
  std::optional<std::size_t> n_accept;
  std::optional<std::uint64_t> budget;
  bool emit_bundles = false;
  std::optional<std::string> variant;
  std::optional<std::string> proposal;
  std::optional<std::size_t> n_iter;
  std::optional<std::size_t> burn_in;
  std::optional<std::size_t> thin;
  std::vector<double> step_sd;
  std::optional<double> h_start;
  std::optional<double> h_end;
  std::optional<std::size_t> steps;
  std::optional<std::size_t> particles;
  std::optional<double> ess_threshold;
  std::optional<double> reject_threshold;
};

template <class T, class U>
void apply(const std::optional<T>& flag, U& field) {
  if (flag) field = *flag;
}

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "config file (INI, or a CSV/JSON written by lfs)");
  cmd->add_option("--seed", o.seed, "64-bit seed");
  cmd->add_option("--threads", o.threads, "worker threads (0 = all cores); never changes results")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--out", o.out, "output path");
}

void add_problem(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--summary", o.summary, "JSON summary path");
  cmd->add_option("--model", o.model, "normal-mean|bernoulli-count");
  cmd->add_option("--observed", o.observed, "observed summary t_y");
  cmd->add_option("--kernel", o.kernel, "uniform|epanechnikov|gaussian");
  cmd->add_option("--h", o.h, "kernel bandwidth");
  cmd->add_option("--s", o.s, "auxiliary datasets per parameter");
}

lfs::RunConfig resolve(const Overrides& o, const std::string& command) {
  lfs::RunConfig c = o.config_path.empty() ? lfs::RunConfig{} : lfs::load_config(o.config_path);
  apply(o.seed, c.run.seed);
  apply(o.s, c.run.s);
  if (command != "experiment") apply(o.out, c.run.out);
  apply(o.summary, c.run.summary);
  if (o.model) {
    // A different model invalidates an observed value taken from the file.
    if (*o.model != c.model.name) c.model.observed.reset();
    c.model.name = *o.model;
  }
  if (o.observed) c.model.observed = *o.observed;
  apply(o.kernel, c.kernel.kind);
  apply(o.h, c.kernel.h);
  apply(o.n_accept, c.rejection.n_accept);
  apply(o.budget, c.rejection.budget);
  if (o.emit_bundles) c.rejection.emit_bundles = true;
  if (command == "mcmc") {
    apply(o.variant, c.mcmc.variant);
    apply(o.proposal, c.mcmc.proposal);
    apply(o.n_iter, c.mcmc.n_iter);
    if (o.burn_in) c.mcmc.burn_in = *o.burn_in;
    apply(o.thin, c.mcmc.thin);
    if (!o.step_sd.empty()) c.mcmc.step_sd = o.step_sd;
  } else if (command == "smc") {
    apply(o.variant, c.smc.variant);
    apply(o.h_start, c.smc.h_start);
    apply(o.h_end, c.smc.h_end);
    apply(o.steps, c.smc.steps);
    apply(o.particles, c.smc.particles);
    apply(o.ess_threshold, c.smc.ess_threshold);
    if (o.reject_threshold) c.smc.reject_threshold = *o.reject_threshold;
    if (!o.step_sd.empty()) c.smc.step_sd = o.step_sd;
  }
  lfs::validate(c);
  return c;
}

int run_sampler(const std::string& command, const Overrides& o) {
  const lfs::RunConfig config = resolve(o, command);
  const int threads = o.threads.value_or(1);
  lfs::RunOutput output;
  if (command == "reject") output = lfs::run_reject_command(config, threads);
  else if (command == "mcmc") output = lfs::run_mcmc_command(config);
  else output = lfs::run_smc_command(config, threads);
  const auto paths = lfs::resolve_paths(config, command);
  lfs::write_run_output(output, paths);
  std::cerr << command << ": " << output.samples.size() << " samples -> " << paths.samples
            << ", summary -> " << paths.summary << "\n";
  return EXIT_SUCCESS;
}

int run_experiment(const std::string& name, const Overrides& o) {
  const lfs::RunConfig config = resolve(o, "experiment");
  const auto report = lfs::run_experiment(name, config, o.threads.value_or(1));
  const std::string path =
      o.out ? *o.out
            : (std::filesystem::path(lfs::default_output_dir()) / ("experiment-" + name + ".json"))
                  .string();
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  lfs::write_text(path, lfs::dump(report.to_json()));
  std::cout << "experiment " << name << ": " << (report.passed ? "PASS" : "FAIL") << " (" << path
            << ")\n";
  return report.passed ? EXIT_SUCCESS : kExitStatistical;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Likelihood-free samplers with S auxiliary datasets"};
  app.set_help_flag("--help", "print this help and exit");
  app.require_subcommand(1);
  Overrides o;

  auto* reject = app.add_subcommand("reject", "rejection sampler");
  add_common(reject, o);
  add_problem(reject, o);
  reject->add_option("--n-accept", o.n_accept, "accepted samples to collect");
  reject->add_option("--budget", o.budget, "maximum number of proposals");
  reject->add_flag("--emit-bundles", o.emit_bundles, "write accepted bundles to a sidecar CSV");

  auto* mcmc = app.add_subcommand("mcmc", "MCMC sampler");
  add_common(mcmc, o);
  add_problem(mcmc, o);
  mcmc->add_option("--variant", o.variant, "carried|fresh");
  mcmc->add_option("--proposal", o.proposal, "random-walk|independence");
  mcmc->add_option("--n-iter", o.n_iter, "iterations including burn-in");
  mcmc->add_option("--burn-in", o.burn_in, "discarded iterations");
  mcmc->add_option("--thin", o.thin, "keep every k-th iteration");
  mcmc->add_option("--step-sd", o.step_sd, "random-walk step sd per dimension")->delimiter(',');

  auto* smc = app.add_subcommand("smc", "SMC sampler");
  add_common(smc, o);
  add_problem(smc, o);
  smc->add_option("--variant", o.variant, "joint-move|backward");
  smc->add_option("--h-start", o.h_start, "first bandwidth");
  smc->add_option("--h-end", o.h_end, "final bandwidth");
  smc->add_option("--steps", o.steps, "number of bandwidths");
  smc->add_option("--particles", o.particles, "particle count N");
  smc->add_option("--ess-threshold", o.ess_threshold, "resample when ESS < threshold * N");
  smc->add_option("--reject-threshold", o.reject_threshold, "particle rejection threshold c");
  smc->add_option("--step-sd", o.step_sd, "mutation step sd per dimension")->delimiter(',');

  auto* experiment = app.add_subcommand("experiment", "headline experiments");
  std::string experiment_name;
  experiment->add_option("name", experiment_name, "equivalence|mcwm-bias|s-invariance")
      ->required()
      ->check(CLI::IsMember({"equivalence", "mcwm-bias", "s-invariance"}));
  add_common(experiment, o);

  auto* validate = app.add_subcommand("validate-config", "check a config and print it canonically");
  std::string validate_path;
  validate->add_option("config", validate_path, "config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*validate) {
      const auto config = lfs::load_config(validate_path);
      lfs::validate(config);
      std::cout << lfs::write_config(config);
      return EXIT_SUCCESS;
    }
    if (*experiment) return run_experiment(experiment_name, o);
    for (auto* cmd : {reject, mcmc, smc})
      if (*cmd) return run_sampler(cmd->get_name(), o);
  } catch (const lfs::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const lfs::CapabilityError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const lfs::DomainError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const lfs::BudgetExhausted& e) {
    std::cerr << "budget exhausted: " << e.what() << "\n";
    return kExitBudget;
  } catch (const lfs::WeightCollapse& e) {
    std::cerr << "weight collapse: " << e.what() << "\n";
    return kExitStatistical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitStatistical;
  }
  return EXIT_SUCCESS;
}
