#include "lfs/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <boost/math/distributions/beta.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "lfs/errors.hpp"

namespace lfs {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double normal_pdf(double x) { return std::exp(-0.5 * x * x) * std::numbers::inv_sqrtpi / std::numbers::sqrt2; }
double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// Scalar bandwidth seen by a 1-D summary once the distance weight is applied.
double effective_bandwidth(const SmoothingKernel& kernel) {
  const auto& w = kernel.distance().weights();
  return w.empty() ? kernel.bandwidth() : kernel.bandwidth() / std::sqrt(w.front());
}

// E[K_h(delta - e)] for e ~ N(0, sd^2), i.e. the kernel convolved with a
// normal. Closed form for all three profiles.
double smoothed_normal(KernelKind kind, double h, double delta, double sd) {
  switch (kind) {
  case KernelKind::gaussian: {
    const double s = std::hypot(sd, h);
    return normal_pdf(delta / s) / s;
  }
  case KernelKind::uniform:
    return (normal_cdf((delta + h) / sd) - normal_cdf((delta - h) / sd)) / (2.0 * h);
  case KernelKind::epanechnikov: {
    // x = delta - e ~ N(delta, sd^2); truncated moments on [-h, h].
    const double a = (-h - delta) / sd;
    const double b = (h - delta) / sd;
    const double mass = normal_cdf(b) - normal_cdf(a);
    const double pa = normal_pdf(a);
    const double pb = normal_pdf(b);
    const double second = delta * delta * mass + 2.0 * delta * sd * (pa - pb) +
                          sd * sd * (mass + a * pa - b * pb);
    return std::max(0.0, 0.75 / h * (mass - second / (h * h)));
  }
  }
  return 0.0;
}

// Tabulated integrals of a 1-D density on [lo, hi] for cdf/mean/variance.
class DensityTable {
public:
  DensityTable(std::function<double(double)> density, double lo, double hi, std::size_t segments)
      : density_(std::move(density)), lo_(lo), width_((hi - lo) / static_cast<double>(segments)),
        cumulative_(segments + 1, 0.0) {
    using boost::math::quadrature::gauss_kronrod;
    double first = 0.0, second = 0.0;
    for (std::size_t j = 0; j < segments; ++j) {
      const double a = lo_ + width_ * static_cast<double>(j);
      const double b = a + width_;
      cumulative_[j + 1] = cumulative_[j] + gauss_kronrod<double, 15>::integrate(density_, a, b, 0);
      first += gauss_kronrod<double, 15>::integrate([&](double x) { return x * density_(x); }, a, b, 0);
      second += gauss_kronrod<double, 15>::integrate([&](double x) { return x * x * density_(x); }, a, b, 0);
    }
    total_ = cumulative_.back();
    mean_ = first / total_;
    variance_ = second / total_ - mean_ * mean_;
  }

  double cdf(double x) const {
    using boost::math::quadrature::gauss_kronrod;
    if (x <= lo_) return 0.0;
    const auto j = static_cast<std::size_t>((x - lo_) / width_);
    if (j >= cumulative_.size() - 1) return 1.0;
    const double a = lo_ + width_ * static_cast<double>(j);
    const double partial = x > a ? gauss_kronrod<double, 15>::integrate(density_, a, x, 0) : 0.0;
    return std::clamp((cumulative_[j] + partial) / total_, 0.0, 1.0);
  }
  double total() const noexcept { return total_; }
  double mean() const noexcept { return mean_; }
  double variance() const noexcept { return variance_; }

private:
  std::function<double(double)> density_;
  double lo_;
  double width_;
  std::vector<double> cumulative_;
  double total_ = 0.0;
  double mean_ = 0.0;
  double variance_ = 0.0;
};

} // namespace

std::optional<AnalyticOracle> Model::oracle(std::span<const double>, const SmoothingKernel&) const {
  return std::nullopt;
}

AuxiliaryBundle Model::simulate(std::span<const double> theta, std::size_t S,
                                RandomStream& rng) const {
  if (S == 0) throw ConfigError("number of auxiliary datasets S must be at least 1");
  if (theta.size() != param_dim()) throw ConfigError("parameter dimension mismatch for " + name());
  if (prior_logdensity(theta) == kNegInf)
    throw DomainError("simulate called outside the prior support of " + name());
  AuxiliaryBundle bundle(S, summary_dim());
  for (std::size_t s = 0; s < S; ++s) simulate_one(theta, rng, bundle[s]);
  return bundle;
}

AnalyticOracle require_oracle(const Model& model, std::span<const double> observed,
                              const SmoothingKernel& kernel) {
  auto oracle = model.oracle(observed, kernel);
  if (!oracle)
    throw CapabilityError("model " + model.name() + " has no analytic oracle for the " +
                          std::string(to_string(kernel.kind())) + " kernel");
  return std::move(*oracle);
}

double oracle_density(const Model& model, std::span<const double> theta,
                      std::span<const double> observed, const SmoothingKernel& kernel) {
  if (theta.size() != 1) throw CapabilityError("analytic oracles are one-dimensional");
  return require_oracle(model, observed, kernel).density(theta[0]);
}

// ---- NormalMeanModel ------------------------------------------------------

NormalMeanModel::NormalMeanModel(double prior_mean, double prior_sd, double tau)
    : prior_mean_(prior_mean), prior_sd_(prior_sd), tau_(tau) {
  if (!std::isfinite(prior_mean)) throw ConfigError("normal-mean prior mean must be finite");
  if (!(prior_sd > 0.0) || !std::isfinite(prior_sd))
    throw ConfigError("normal-mean prior sd must be positive");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw ConfigError("normal-mean tau must be positive");
}

ParamVector NormalMeanModel::prior_sample(RandomStream& rng) const {
  return {rng.normal(prior_mean_, prior_sd_)};
}

double NormalMeanModel::prior_logdensity(std::span<const double> theta) const {
  if (!std::isfinite(theta[0])) return kNegInf;
  const double z = (theta[0] - prior_mean_) / prior_sd_;
  return -0.5 * z * z - std::log(prior_sd_) - 0.5 * std::log(2.0 * std::numbers::pi);
}

void NormalMeanModel::simulate_one(std::span<const double> theta, RandomStream& rng,
                                   std::span<double> out) const {
  out[0] = rng.normal(theta[0], tau_);
}

std::optional<AnalyticOracle> NormalMeanModel::oracle(std::span<const double> observed,
                                                      const SmoothingKernel& kernel) const {
  if (observed.size() != 1) return std::nullopt;
  const double ty = observed[0];
  const double h = effective_bandwidth(kernel);
  const KernelKind kind = kernel.kind();

  if (kind == KernelKind::gaussian) {
    // Smoothing inflates the likelihood variance to tau^2 + h^2.
    const double lik_var = tau_ * tau_ + h * h;
    const double precision = 1.0 / (prior_sd_ * prior_sd_) + 1.0 / lik_var;
    const double var = 1.0 / precision;
    const double mean = var * (prior_mean_ / (prior_sd_ * prior_sd_) + ty / lik_var);
    const double sd = std::sqrt(var);
    return AnalyticOracle([=](double x) { return normal_pdf((x - mean) / sd) / sd; },
                          [=](double x) { return normal_cdf((x - mean) / sd); }, mean, var);
  }

  // theta + e ~ N(prior_mean, prior_sd^2 + tau^2) gives the normalizer in closed form.
  const double evidence = smoothed_normal(kind, h, ty - prior_mean_, std::hypot(prior_sd_, tau_));
  if (!(evidence > 0.0)) return std::nullopt;
  const double mu0 = prior_mean_, sd0 = prior_sd_, tau = tau_;
  auto density = [=](double x) {
    return normal_pdf((x - mu0) / sd0) / sd0 * smoothed_normal(kind, h, ty - x, tau) / evidence;
  };
  const double reach = 12.0 * std::max(sd0, tau + h);
  auto table = std::make_shared<DensityTable>(density, std::min(mu0, ty) - reach,
                                              std::max(mu0, ty) + reach, 4000);
  return AnalyticOracle(density, [table](double x) { return table->cdf(x); }, table->mean(),
                        table->variance());
}

// ---- BernoulliCountModel --------------------------------------------------

BernoulliCountModel::BernoulliCountModel(int trials) : trials_(trials) {
  if (trials < 1) throw ConfigError("bernoulli-count trials must be at least 1");
}

ParamVector BernoulliCountModel::prior_sample(RandomStream& rng) const { return {rng.uniform()}; }

double BernoulliCountModel::prior_logdensity(std::span<const double> theta) const {
  return theta[0] >= 0.0 && theta[0] <= 1.0 ? 0.0 : kNegInf;
}

ParamVector BernoulliCountModel::prior_scale() const { return {1.0 / std::sqrt(12.0)}; }

void BernoulliCountModel::simulate_one(std::span<const double> theta, RandomStream& rng,
                                       std::span<double> out) const {
  out[0] = static_cast<double>(rng.binomial(trials_, theta[0]));
}

std::optional<AnalyticOracle> BernoulliCountModel::oracle(std::span<const double> observed,
                                                          const SmoothingKernel& kernel) const {
  if (observed.size() != 1) return std::nullopt;
  // Under the uniform prior every count t has prior predictive mass 1/(m+1),
  // so pi_M is a mixture of Beta(t+1, m-t+1) with weights prop. to K_h(t_y - t).
  const int m = trials_;
  std::vector<double> weights(static_cast<std::size_t>(m) + 1);
  double total = 0.0;
  for (int t = 0; t <= m; ++t) {
    const double count = t;
    weights[static_cast<std::size_t>(t)] = kernel.between(observed, std::span<const double>(&count, 1));
    total += weights[static_cast<std::size_t>(t)];
  }
  if (!(total > 0.0)) return std::nullopt;
  double mean = 0.0, second = 0.0;
  const double md = m;
  for (int t = 0; t <= m; ++t) {
    auto& w = weights[static_cast<std::size_t>(t)];
    w /= total;
    mean += w * (t + 1) / (md + 2.0);
    second += w * (t + 1) * (t + 2) / ((md + 2.0) * (md + 3.0));
  }
  auto density = [weights, m](double x) {
    if (x < 0.0 || x > 1.0) return 0.0;
    double sum = 0.0;
    for (int t = 0; t <= m; ++t) {
      const double w = weights[static_cast<std::size_t>(t)];
      if (w > 0.0) sum += w * boost::math::pdf(boost::math::beta_distribution<>(t + 1.0, m - t + 1.0), x);
    }
    return sum;
  };
  auto cdf = [weights, m](double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double sum = 0.0;
    for (int t = 0; t <= m; ++t) {
      const double w = weights[static_cast<std::size_t>(t)];
      if (w > 0.0) sum += w * boost::math::ibeta(t + 1.0, m - t + 1.0, x);
    }
    return sum;
  };
  return AnalyticOracle(density, cdf, mean, second - mean * mean);
}

} // namespace lfs
