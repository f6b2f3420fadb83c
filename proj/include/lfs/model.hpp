#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>

#include "lfs/bundle.hpp"
#include "lfs/kernel.hpp"
#include "lfs/random.hpp"

namespace lfs {

/// Exact smoothed marginal posterior pi_M(theta | t_y) for a scalar parameter.
class AnalyticOracle {
public:
  AnalyticOracle(std::function<double(double)> density, std::function<double(double)> cdf,
                 double mean, double variance)
      : density_(std::move(density)), cdf_(std::move(cdf)), mean_(mean), variance_(variance) {}

  double density(double theta) const { return density_(theta); }
  double cdf(double theta) const { return cdf_(theta); }
  double mean() const noexcept { return mean_; }
  double variance() const noexcept { return variance_; }

private:
  std::function<double(double)> density_;
  std::function<double(double)> cdf_;
  double mean_;
  double variance_;
};

/// Prior pi(theta), simulator t ~ f(t | theta) (summary map included) and an
/// optional analytic oracle. Implementations are immutable after
/// construction; simulate may be called concurrently with independent streams.
class Model {
public:
  virtual ~Model() = default;

  virtual std::string name() const = 0;
  virtual std::size_t param_dim() const = 0;
  virtual std::size_t summary_dim() const = 0;

  virtual ParamVector prior_sample(RandomStream& rng) const = 0;
  /// log pi(theta); -inf outside the support.
  virtual double prior_logdensity(std::span<const double> theta) const = 0;
  /// Per-dimension prior standard deviation, used for default proposal scales.
  virtual ParamVector prior_scale() const = 0;

  /// Writes one summary vector T(x), x ~ f(x | theta), into out.
  virtual void simulate_one(std::span<const double> theta, RandomStream& rng,
                            std::span<double> out) const = 0;

  /// Smoothed marginal posterior for (observed, kernel), if this model has one.
  virtual std::optional<AnalyticOracle> oracle(std::span<const double> observed,
                                               const SmoothingKernel& kernel) const;

  /// S conditionally independent summaries at theta.
  /// Throws DomainError outside the prior support and ConfigError for S == 0.
  AuxiliaryBundle simulate(std::span<const double> theta, std::size_t S, RandomStream& rng) const;
};

/// Value of the normalized pi_M(theta | t_y). Throws CapabilityError when
/// the model has no oracle for this kernel.
double oracle_density(const Model& model, std::span<const double> theta,
                      std::span<const double> observed, const SmoothingKernel& kernel);

AnalyticOracle require_oracle(const Model& model, std::span<const double> observed,
                              const SmoothingKernel& kernel);

/// theta ~ N(prior_mean, prior_sd^2), t | theta ~ N(theta, tau^2).
class NormalMeanModel final : public Model {
public:
  explicit NormalMeanModel(double prior_mean = 0.0, double prior_sd = 1.0, double tau = 1.0);

  std::string name() const override { return "normal-mean"; }
  std::size_t param_dim() const override { return 1; }
  std::size_t summary_dim() const override { return 1; }

  ParamVector prior_sample(RandomStream& rng) const override;
  double prior_logdensity(std::span<const double> theta) const override;
  ParamVector prior_scale() const override { return {prior_sd_}; }
  void simulate_one(std::span<const double> theta, RandomStream& rng,
                    std::span<double> out) const override;
  std::optional<AnalyticOracle> oracle(std::span<const double> observed,
                                       const SmoothingKernel& kernel) const override;

  double prior_mean() const noexcept { return prior_mean_; }
  double prior_sd() const noexcept { return prior_sd_; }
  double tau() const noexcept { return tau_; }

private:
  double prior_mean_;
  double prior_sd_;
  double tau_;
};

/// theta ~ Uniform(0, 1), t | theta ~ Binomial(trials, theta).
class BernoulliCountModel final : public Model {
public:
  explicit BernoulliCountModel(int trials = 20);

  std::string name() const override { return "bernoulli-count"; }
  std::size_t param_dim() const override { return 1; }
  std::size_t summary_dim() const override { return 1; }

  ParamVector prior_sample(RandomStream& rng) const override;
  double prior_logdensity(std::span<const double> theta) const override;
  ParamVector prior_scale() const override;
  void simulate_one(std::span<const double> theta, RandomStream& rng,
                    std::span<double> out) const override;
  std::optional<AnalyticOracle> oracle(std::span<const double> observed,
                                       const SmoothingKernel& kernel) const override;

  int trials() const noexcept { return trials_; }

private:
  int trials_;
};

/// Decorator that counts simulate_one calls on the wrapped model.
class CountingModel final : public Model {
public:
  explicit CountingModel(std::shared_ptr<const Model> inner) : inner_(std::move(inner)) {}

  std::string name() const override { return inner_->name(); }
  std::size_t param_dim() const override { return inner_->param_dim(); }
  std::size_t summary_dim() const override { return inner_->summary_dim(); }
  ParamVector prior_sample(RandomStream& rng) const override { return inner_->prior_sample(rng); }
  double prior_logdensity(std::span<const double> theta) const override {
    return inner_->prior_logdensity(theta);
  }
  ParamVector prior_scale() const override { return inner_->prior_scale(); }
  void simulate_one(std::span<const double> theta, RandomStream& rng,
                    std::span<double> out) const override {
    calls_.fetch_add(1, std::memory_order_relaxed);
    inner_->simulate_one(theta, rng, out);
  }
  std::optional<AnalyticOracle> oracle(std::span<const double> observed,
                                       const SmoothingKernel& kernel) const override {
    return inner_->oracle(observed, kernel);
  }

  std::uint64_t calls() const noexcept { return calls_.load(); }
  void reset() noexcept { calls_.store(0); }

private:
  std::shared_ptr<const Model> inner_;
  mutable std::atomic<std::uint64_t> calls_{0};
};

} // namespace lfs
