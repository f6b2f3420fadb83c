#pragma once

#include <cstddef>
#include <memory>
#include <span>

#include "lfs/bundle.hpp"
#include "lfs/kernel.hpp"
#include "lfs/model.hpp"
#include "lfs/random.hpp"

namespace lfs {

/// The ingredients every sampler shares: model, observed summaries, kernel.
struct Problem {
  std::shared_ptr<const Model> model;
  SummaryVector observed;
  SmoothingKernel kernel;

  Problem at_bandwidth(double h) const { return {model, observed, kernel.with_bandwidth(h)}; }
};

/// Joint state (theta, t^{1:S}) with its cached pooled kernel value.
struct WeightedParam {
  ParamVector theta;
  AuxiliaryBundle bundle;
  double log_pooled_kernel;
};

/// log[ K~_h(t_y, t^{1:S}) pi(theta) ].
///
/// This is the joint target pi_J(theta, t^{1:S} | t_y) with the factor
/// prod_s f(t^s | theta) removed. Every sampler in this library proposes the
/// bundle from the simulator itself, so that factor appears identically in
/// target and proposal and cancels from every acceptance ratio and weight.
/// The bundle must therefore have been generated at theta.
/// Returns -inf when the pooled kernel or the prior is zero.
double joint_logdensity_unnorm(std::span<const double> theta, const AuxiliaryBundle& bundle,
                               std::span<const double> observed, const SmoothingKernel& kernel,
                               const Model& model);

struct MarginalEstimate {
  double log_value;
  AuxiliaryBundle bundle;
};

/// log of pi(theta)/S sum_s K_h(t_y - t^s) on a fresh bundle of S summaries,
/// an unbiased estimate of the unnormalized marginal posterior at theta.
/// The bundle is returned so callers can carry it as sampler state.
MarginalEstimate marginal_logestimate(std::span<const double> theta, std::size_t S,
                                      std::span<const double> observed,
                                      const SmoothingKernel& kernel, const Model& model,
                                      RandomStream& rng);

} // namespace lfs
