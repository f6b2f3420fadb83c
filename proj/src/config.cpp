#include "lfs/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include "json.hpp"

#include "lfs/errors.hpp"
#include "lfs/format.hpp"

namespace lfs {

namespace pt = boost::property_tree;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_floating_point_v<T>)
      out += format_double(values[i]);
    else
      out += std::to_string(values[i]);
  }
  return out;
}

// Reads typed keys from one section and remembers which were consumed.
class SectionReader {
public:
  SectionReader(const pt::ptree& root, std::string name) : name_(std::move(name)) {
    if (auto child = root.get_child_optional(name_)) section_ = &*child;
  }

  template <typename T>
  void read(const std::string& key, T& target) {
    auto raw = take(key);
    if (!raw) return;
    try {
      target = convert<T>(*raw);
    } catch (const ConfigError& e) {
      throw ConfigError("[" + name_ + "] " + key + ": " + e.what());
    }
  }

  template <typename T>
  void read(const std::string& key, std::optional<T>& target) {
    auto raw = take(key);
    if (!raw) return;
    try {
      target = convert<T>(*raw);
    } catch (const ConfigError& e) {
      throw ConfigError("[" + name_ + "] " + key + ": " + e.what());
    }
  }

  void finish() const {
    if (!section_) return;
    for (const auto& [key, value] : *section_)
      if (!used_.count(key)) throw ConfigError("unknown key '" + key + "' in [" + name_ + "]");
  }

private:
  std::optional<std::string> take(const std::string& key) {
    if (!section_) return std::nullopt;
    auto v = section_->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
    if (!v) return std::nullopt;
    used_.insert(key);
    return trim(*v);
  }

  template <typename T>
  static T convert(const std::string& raw) {
    if constexpr (std::is_same_v<T, std::string>) {
      return raw;
    } else if constexpr (std::is_same_v<T, bool>) {
      if (raw == "true" || raw == "1") return true;
      if (raw == "false" || raw == "0") return false;
      throw ConfigError("expected true|false, got '" + raw + "'");
    } else if constexpr (std::is_floating_point_v<T>) {
      return parse_double(raw);
    } else if constexpr (std::is_integral_v<T>) {
      return parse_integer<T>(raw);
    } else {
      T out;
      for (auto part : split(raw, ',')) out.push_back(convert<typename T::value_type>(trim(part)));
      return out;
    }
  }

  std::string name_;
  const pt::ptree* section_ = nullptr;
  std::set<std::string> used_;
};

} // namespace

RunConfig parse_config(std::string_view text) {
  pt::ptree root;
  std::istringstream in{std::string(text)};
  try {
    pt::read_ini(in, root);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  static const std::set<std::string> sections{"run", "model", "kernel", "rejection",
                                              "mcmc", "smc", "experiment"};
  for (const auto& [name, child] : root) {
    if (!sections.count(name)) throw ConfigError("unknown config section [" + name + "]");
  }

  RunConfig c;
  {
    SectionReader r(root, "run");
    r.read("seed", c.run.seed);
    r.read("s", c.run.s);
    r.read("out", c.run.out);
    r.read("summary", c.run.summary);
    r.finish();
  }
  {
    SectionReader r(root, "model");
    r.read("name", c.model.name);
    r.read("prior_mean", c.model.prior_mean);
    r.read("prior_sd", c.model.prior_sd);
    r.read("tau", c.model.tau);
    r.read("trials", c.model.trials);
    r.read("observed", c.model.observed);
    r.finish();
  }
  {
    SectionReader r(root, "kernel");
    r.read("kind", c.kernel.kind);
    r.read("h", c.kernel.h);
    r.read("weights", c.kernel.weights);
    r.finish();
  }
  {
    SectionReader r(root, "rejection");
    r.read("n_accept", c.rejection.n_accept);
    r.read("budget", c.rejection.budget);
    r.read("chunk_size", c.rejection.chunk_size);
    r.read("emit_bundles", c.rejection.emit_bundles);
    r.finish();
  }
  {
    SectionReader r(root, "mcmc");
    r.read("variant", c.mcmc.variant);
    r.read("proposal", c.mcmc.proposal);
    r.read("n_iter", c.mcmc.n_iter);
    r.read("burn_in", c.mcmc.burn_in);
    r.read("thin", c.mcmc.thin);
    r.read("step_sd", c.mcmc.step_sd);
    r.read("init", c.mcmc.init);
    r.finish();
  }
  {
    SectionReader r(root, "smc");
    r.read("variant", c.smc.variant);
    r.read("h_start", c.smc.h_start);
    r.read("h_end", c.smc.h_end);
    r.read("steps", c.smc.steps);
    r.read("particles", c.smc.particles);
    r.read("ess_threshold", c.smc.ess_threshold);
    r.read("reject_threshold", c.smc.reject_threshold);
    r.read("step_sd", c.smc.step_sd);
    r.finish();
  }
  {
    auto& e = c.experiment;
    SectionReader r(root, "experiment");
    r.read("alpha", e.alpha);
    r.read("tolerance_se", e.tolerance_se);
    r.read("permutations", e.permutations);
    r.read("bootstrap", e.bootstrap);
    r.read("equivalence_iterations", e.equivalence_iterations);
    r.read("cross_s", e.cross_s);
    r.read("replicates", e.replicates);
    r.read("cross_samples", e.cross_samples);
    r.read("cross_mcmc_iter", e.cross_mcmc_iter);
    r.read("cross_particles", e.cross_particles);
    r.read("bias_s", e.bias_s);
    r.read("bias_chains", e.bias_chains);
    r.read("bias_iter", e.bias_iter);
    r.read("invariance_s", e.invariance_s);
    r.read("invariance_samples", e.invariance_samples);
    r.read("invariance_thin", e.invariance_thin);
    r.finish();
  }
  return c;
}

std::string write_config(const RunConfig& c) {
  std::ostringstream out;
  const auto d = [](double x) { return format_double(x); };
  out << "[run]\n"
      << "seed=" << c.run.seed << "\n"
      << "s=" << c.run.s << "\n"
      << "out=" << c.run.out << "\n"
      << "summary=" << c.run.summary << "\n\n";
  out << "[model]\n"
      << "name=" << c.model.name << "\n"
      << "prior_mean=" << d(c.model.prior_mean) << "\n"
      << "prior_sd=" << d(c.model.prior_sd) << "\n"
      << "tau=" << d(c.model.tau) << "\n"
      << "trials=" << c.model.trials << "\n";
  if (c.model.observed) out << "observed=" << d(*c.model.observed) << "\n";
  out << "\n[kernel]\n"
      << "kind=" << c.kernel.kind << "\n"
      << "h=" << d(c.kernel.h) << "\n"
      << "weights=" << join(c.kernel.weights) << "\n\n";
  out << "[rejection]\n"
      << "n_accept=" << c.rejection.n_accept << "\n"
      << "budget=" << c.rejection.budget << "\n"
      << "chunk_size=" << c.rejection.chunk_size << "\n"
      << "emit_bundles=" << (c.rejection.emit_bundles ? "true" : "false") << "\n\n";
  out << "[mcmc]\n"
      << "variant=" << c.mcmc.variant << "\n"
      << "proposal=" << c.mcmc.proposal << "\n"
      << "n_iter=" << c.mcmc.n_iter << "\n";
  if (c.mcmc.burn_in) out << "burn_in=" << *c.mcmc.burn_in << "\n";
  out << "thin=" << c.mcmc.thin << "\n"
      << "step_sd=" << join(c.mcmc.step_sd) << "\n"
      << "init=" << join(c.mcmc.init) << "\n\n";
  out << "[smc]\n"
      << "variant=" << c.smc.variant << "\n"
      << "h_start=" << d(c.smc.h_start) << "\n"
      << "h_end=" << d(c.smc.h_end) << "\n"
      << "steps=" << c.smc.steps << "\n"
      << "particles=" << c.smc.particles << "\n"
      << "ess_threshold=" << d(c.smc.ess_threshold) << "\n";
  if (c.smc.reject_threshold) out << "reject_threshold=" << d(*c.smc.reject_threshold) << "\n";
  out << "step_sd=" << join(c.smc.step_sd) << "\n\n";
  const auto& e = c.experiment;
  out << "[experiment]\n"
      << "alpha=" << d(e.alpha) << "\n"
      << "tolerance_se=" << d(e.tolerance_se) << "\n"
      << "permutations=" << e.permutations << "\n"
      << "bootstrap=" << e.bootstrap << "\n"
      << "equivalence_iterations=" << e.equivalence_iterations << "\n"
      << "cross_s=" << join(e.cross_s) << "\n"
      << "replicates=" << e.replicates << "\n"
      << "cross_samples=" << e.cross_samples << "\n"
      << "cross_mcmc_iter=" << e.cross_mcmc_iter << "\n"
      << "cross_particles=" << e.cross_particles << "\n"
      << "bias_s=" << join(e.bias_s) << "\n"
      << "bias_chains=" << e.bias_chains << "\n"
      << "bias_iter=" << e.bias_iter << "\n"
      << "invariance_s=" << join(e.invariance_s) << "\n"
      << "invariance_samples=" << e.invariance_samples << "\n"
      << "invariance_thin=" << e.invariance_thin << "\n";
  return out.str();
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();

  if (path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0) {
    try {
      const auto doc = nlohmann::json::parse(text);
      return parse_config(doc.at("provenance").at("config").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("no embedded config in '" + path + "': " + e.what());
    }
  }
  if (text.rfind("# ", 0) == 0) {
    // Embedded in a CSV: leading "# " lines, ended by the header row.
    std::string embedded;
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line) && line.rfind("#", 0) == 0)
      embedded += (line.size() > 2 ? line.substr(2) : std::string()) + "\n";
    return parse_config(embedded);
  }
  return parse_config(text);
}

std::shared_ptr<const Model> make_model(const ModelSection& m) {
  if (m.name == "normal-mean") return std::make_shared<NormalMeanModel>(m.prior_mean, m.prior_sd, m.tau);
  if (m.name == "bernoulli-count") return std::make_shared<BernoulliCountModel>(m.trials);
  throw ConfigError("unknown model '" + m.name + "' (expected normal-mean|bernoulli-count)");
}

SummaryVector observed_summary(const ModelSection& m) {
  if (m.observed) return {*m.observed};
  return {m.name == "bernoulli-count" ? 7.0 : 0.0};
}

SmoothingKernel make_kernel(const KernelSection& k) {
  return SmoothingKernel(parse_kernel_kind(k.kind), k.h,
                         k.weights.empty() ? SummaryDistance{} : SummaryDistance(k.weights));
}

Problem make_problem(const RunConfig& config) {
  return Problem{make_model(config.model), observed_summary(config.model), make_kernel(config.kernel)};
}

ProposalSpec make_proposal(const std::string& kind, const std::vector<double>& step_sd,
                           const Model& model) {
  if (kind == "independence") return ProposalSpec::independence_prior();
  if (kind != "random-walk")
    throw ConfigError("unknown proposal '" + kind + "' (expected random-walk|independence)");
  if (!step_sd.empty()) {
    if (step_sd.size() != model.param_dim())
      throw ConfigError("step_sd needs one value per parameter dimension");
    return ProposalSpec::random_walk(step_sd);
  }
  auto sd = model.prior_scale();
  for (double& x : sd) x /= 2.0;
  return ProposalSpec::random_walk(std::move(sd));
}

RejectionSettings make_rejection_settings(const RunConfig& c, int threads) {
  RejectionSettings s;
  s.S = c.run.s;
  s.n_accept = c.rejection.n_accept;
  s.budget = c.rejection.budget;
  s.chunk_size = c.rejection.chunk_size;
  s.threads = threads;
  return s;
}

McmcSettings make_mcmc_settings(const RunConfig& c, const Model& model) {
  McmcSettings s;
  s.S = c.run.s;
  s.variant = parse_mcmc_variant(c.mcmc.variant);
  s.proposal = make_proposal(c.mcmc.proposal, c.mcmc.step_sd, model);
  s.n_iter = c.mcmc.n_iter;
  s.burn_in = c.mcmc.burn_in.value_or(c.mcmc.n_iter / 10);
  s.thin = c.mcmc.thin;
  if (!c.mcmc.init.empty()) s.init = c.mcmc.init;
  return s;
}

SmcSettings make_smc_settings(const RunConfig& c, const Model& model, int threads) {
  SmcSettings s;
  s.S = c.run.s;
  s.N = c.smc.particles;
  s.variant = parse_smc_variant(c.smc.variant);
  s.rejection_threshold = c.smc.reject_threshold;
  s.mutation = make_proposal("random-walk", c.smc.step_sd, model);
  s.ess_threshold = c.smc.ess_threshold;
  s.threads = threads;
  return s;
}

BandwidthSchedule make_schedule(const SmcSection& s) {
  return BandwidthSchedule::geometric(s.h_start, s.h_end, s.steps);
}

void validate(const RunConfig& c) {
  if (c.run.s == 0) throw ConfigError("[run] s must be at least 1");
  const Problem problem = make_problem(c);
  if (problem.observed.size() != problem.model->summary_dim())
    throw ConfigError("observed summary dimension does not match the model");
  if (!c.kernel.weights.empty() && c.kernel.weights.size() != problem.model->summary_dim())
    throw ConfigError("[kernel] weights needs one value per summary dimension");
  if (c.rejection.n_accept == 0) throw ConfigError("[rejection] n_accept must be at least 1");
  if (c.rejection.chunk_size == 0) throw ConfigError("[rejection] chunk_size must be at least 1");
  const auto mcmc = make_mcmc_settings(c, *problem.model);
  if (mcmc.n_iter <= mcmc.burn_in) throw ConfigError("[mcmc] n_iter must exceed burn_in");
  if (mcmc.thin == 0) throw ConfigError("[mcmc] thin must be at least 1");
  if (!c.mcmc.init.empty() && c.mcmc.init.size() != problem.model->param_dim())
    throw ConfigError("[mcmc] init needs one value per parameter dimension");
  make_schedule(c.smc);
  const auto smc = make_smc_settings(c, *problem.model);
  if (smc.N < 2) throw ConfigError("[smc] particles must be at least 2");
  if (!(smc.ess_threshold > 0.0 && smc.ess_threshold <= 1.0))
    throw ConfigError("[smc] ess_threshold must lie in (0, 1]");
  if (smc.rejection_threshold) {
    if (smc.variant != SmcVariant::backward_kernel)
      throw ConfigError("[smc] reject_threshold is only valid with variant=backward");
    if (!(*smc.rejection_threshold > 0.0 && *smc.rejection_threshold < 1.0))
      throw ConfigError("[smc] reject_threshold must lie in (0, 1)");
  }
  const auto& e = c.experiment;
  if (!(e.alpha > 0.0 && e.alpha < 1.0)) throw ConfigError("[experiment] alpha must lie in (0, 1)");
  if (e.replicates < 2 || e.bias_chains < 2)
    throw ConfigError("[experiment] replicates and bias_chains must be at least 2");
  if (e.bias_s.size() < 2 || e.invariance_s.size() < 2 || e.cross_s.empty())
    throw ConfigError("[experiment] S grids need at least two values (cross_s at least one)");
}

std::string default_output_dir() {
  const char* dir = std::getenv("LFS_OUTPUT_DIR");
  return dir && *dir ? dir : ".";
}

} // namespace lfs
