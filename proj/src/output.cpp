#include "lfs/output.hpp"

#include <fstream>
#include <sstream>

#include "lfs/errors.hpp"
#include "lfs/format.hpp"

namespace lfs {

namespace {

std::string theta_header(std::size_t dim) {
  std::string out;
  for (std::size_t j = 0; j < dim; ++j) out += (j ? ",theta_" : "theta_") + std::to_string(j);
  return out;
}

void append_theta(std::string& out, std::span<const double> theta) {
  for (double x : theta) {
    out += ',';
    out += format_double(x);
  }
}

} // namespace

std::string config_preamble(const RunConfig& config) {
  std::string out;
  std::istringstream lines(write_config(config));
  std::string line;
  while (std::getline(lines, line)) out += line.empty() ? "#\n" : "# " + line + "\n";
  return out;
}

std::string rejection_csv(const RejectionOutput& out, const RunConfig& config) {
  std::string csv = config_preamble(config);
  const std::size_t dim = out.accepted.empty() ? 1 : out.accepted.front().theta.size();
  csv += theta_header(dim) + "\n";
  for (const auto& sample : out.accepted) {
    std::string row;
    append_theta(row, sample.theta);
    csv += row.substr(1) + "\n";
  }
  return csv;
}

std::string bundles_csv(const RejectionOutput& out, const RunConfig& config) {
  std::string csv = config_preamble(config);
  const std::size_t dim = out.accepted.empty() ? 1 : out.accepted.front().bundle.dim();
  csv += "sample,s";
  for (std::size_t j = 0; j < dim; ++j) csv += ",t_" + std::to_string(j);
  csv += "\n";
  for (std::size_t i = 0; i < out.accepted.size(); ++i) {
    const auto& bundle = out.accepted[i].bundle;
    for (std::size_t s = 0; s < bundle.size(); ++s) {
      csv += std::to_string(i) + "," + std::to_string(s);
      append_theta(csv, bundle[s]);
      csv += "\n";
    }
  }
  return csv;
}

std::string mcmc_csv(const McmcOutput& out, const RunConfig& config) {
  std::string csv = config_preamble(config);
  const std::size_t dim = out.records.empty() ? 1 : out.records.front().theta.size();
  csv += "iteration," + theta_header(dim) + ",accepted,log_num\n";
  for (const auto& r : out.records) {
    csv += std::to_string(r.iteration);
    append_theta(csv, r.theta);
    csv += r.accepted ? ",1," : ",0,";
    csv += format_double(r.log_num) + "\n";
  }
  return csv;
}

std::string smc_csv(const SmcOutput& out, const RunConfig& config) {
  std::string csv = config_preamble(config);
  const auto& particles = out.system.particles;
  const std::size_t dim = particles.empty() ? 1 : particles.front().theta.size();
  csv += "particle," + theta_header(dim) + ",weight\n";
  const auto w = out.system.weights();
  for (std::size_t i = 0; i < particles.size(); ++i) {
    csv += std::to_string(i);
    append_theta(csv, particles[i].theta);
    csv += "," + format_double(w[i]) + "\n";
  }
  return csv;
}

WeightedSamples samples_of(const RejectionOutput& out) {
  WeightedSamples samples(out.accepted.empty() ? 1 : out.accepted.front().theta.size());
  for (const auto& a : out.accepted) samples.add(a.theta);
  return samples;
}

WeightedSamples samples_of(const McmcOutput& out) {
  WeightedSamples samples(out.records.empty() ? 1 : out.records.front().theta.size());
  for (const auto& r : out.records) samples.add(r.theta);
  return samples;
}

WeightedSamples samples_of(const SmcOutput& out) {
  const auto& particles = out.system.particles;
  WeightedSamples samples(particles.empty() ? 1 : particles.front().theta.size());
  const auto w = out.system.weights();
  for (std::size_t i = 0; i < particles.size(); ++i) samples.add(particles[i].theta, w[i]);
  return samples;
}

WeightedSamples read_samples_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open samples file '" + path + "'");
  std::string line;
  while (std::getline(in, line) && line.rfind("#", 0) == 0) {
  }
  std::vector<std::size_t> theta_cols;
  std::optional<std::size_t> weight_col;
  const auto header = split(line, ',');
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c].rfind("theta_", 0) == 0) theta_cols.push_back(c);
    if (header[c] == "weight") weight_col = c;
  }
  if (theta_cols.empty()) throw ConfigError("no theta_* columns in '" + path + "'");
  WeightedSamples samples(theta_cols.size());
  std::vector<double> theta(theta_cols.size());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    for (std::size_t j = 0; j < theta_cols.size(); ++j) theta[j] = parse_double(fields.at(theta_cols[j]));
    samples.add(theta, weight_col ? parse_double(fields.at(*weight_col)) : 1.0);
  }
  return samples;
}

Json provenance_json(const RunConfig& config) {
  Json p;
  p["code_version"] = kCodeVersion;
  p["seed"] = config.run.seed;
  p["config"] = write_config(config);
  return p;
}

Json sample_diagnostics(const WeightedSamples& samples, const std::optional<AnalyticOracle>& oracle) {
  const Moments m = weighted_moments(samples);
  Json d;
  d["n"] = samples.size();
  d["mean"] = m.mean;
  d["variance"] = m.variance;
  if (oracle && samples.dim() == 1) {
    d["ks_vs_oracle"] = ks_statistic(samples.column(0), samples.weights(),
                                     [&](double x) { return oracle->cdf(x); });
    d["oracle_mean"] = oracle->mean();
    d["oracle_variance"] = oracle->variance();
  } else {
    d["ks_vs_oracle"] = nullptr;
  }
  return d;
}

std::string dump(const Json& doc) { return doc.dump(2) + "\n"; }

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << content;
}

} // namespace lfs
