#include "lfs/target.hpp"

#include <limits>

namespace lfs {

double joint_logdensity_unnorm(std::span<const double> theta, const AuxiliaryBundle& bundle,
                               std::span<const double> observed, const SmoothingKernel& kernel,
                               const Model& model) {
  const double log_prior = model.prior_logdensity(theta);
  if (log_prior == -std::numeric_limits<double>::infinity()) return log_prior;
  const double log_kernel = kernel.log_pooled_evaluate(observed, bundle);
  if (log_kernel == -std::numeric_limits<double>::infinity()) return log_kernel;
  return log_kernel + log_prior;
}

MarginalEstimate marginal_logestimate(std::span<const double> theta, std::size_t S,
                                      std::span<const double> observed,
                                      const SmoothingKernel& kernel, const Model& model,
                                      RandomStream& rng) {
  MarginalEstimate estimate{0.0, model.simulate(theta, S, rng)};
  estimate.log_value = joint_logdensity_unnorm(theta, estimate.bundle, observed, kernel, model);
  return estimate;
}

} // namespace lfs
