#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "lfs/mcmc.hpp"
#include "lfs/target.hpp"

namespace lfs {

/// Strictly decreasing positive bandwidths h_1 > ... > h_n.
class BandwidthSchedule {
public:
  static BandwidthSchedule geometric(double h_start, double h_end, std::size_t steps);
  static BandwidthSchedule explicit_values(std::vector<double> values);

  const std::vector<double>& values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t k) const { return values_[k]; }

private:
  explicit BandwidthSchedule(std::vector<double> values);
  std::vector<double> values_;
};

enum class SmcVariant {
  /// Reweight on the joint space, resample, then one carried-bundle MCMC move
  /// per particle invariant for the new target.
  joint_mcmc_move,
  /// Mutate every particle, simulate a fresh bundle and weight against the
  /// mixture of mutation densities (suboptimal backward kernel).
  backward_kernel,
};

std::string_view to_string(SmcVariant variant);
SmcVariant parse_smc_variant(std::string_view name);

struct Particle {
  ParamVector theta;
  AuxiliaryBundle bundle;
  double log_weight = 0.0; ///< log of the normalized weight
  double log_num = 0.0;    ///< log[K~_{h_k} pi(theta)] at the system's bandwidth
};

struct ParticleSystem {
  std::vector<Particle> particles;
  std::size_t step = 0; ///< 1-based index into the schedule
  double ess = 0.0;

  std::vector<double> weights() const;
};

/// Combines numerator/denominator log densities with the log backward (L) and
/// forward (M) kernel values into an incremental log weight:
///
///   log_num + log_backward - log_den - log_forward
///
/// Returns -inf when either density is zero (a dead particle stays dead).
double combine_weight_terms(double log_num, double log_den, double log_backward,
                            double log_forward);

/// log w_k for the joint-space sequence:
///
///   [K~_{h_k}(t_y, t_k) pi(theta_k) L(theta_k, theta_{k-1})] /
///   [K~_{h_{k-1}}(t_y, t_{k-1}) pi(theta_{k-1}) M(theta_{k-1}, theta_k)]
///
/// with the bundle parts of L and M factorized as prod_s f(t^s | theta) and
/// cancelled. With M an MCMC kernel invariant for the new target and L its
/// time reversal, pass next == prev and zero log kernels: the weight is then
/// the pre-move ratio K~_{h_k}/K~_{h_{k-1}} on the previous bundle.
double incremental_weight_joint(const Particle& prev, const Particle& next, double h_new,
                                double h_prev, const SmoothingKernel& kernel,
                                std::span<const double> observed, const Model& model,
                                double log_backward = 0.0, double log_forward = 0.0);

/// log of pi_hat_{M,k}(theta_new) / sum_i W_{k-1}^(i) M_k(theta_{k-1}^(i), theta_new).
/// Needs no estimate of the previous target, hence no simulator calls.
double incremental_weight_backward(std::span<const double> theta_new, double log_num_new,
                                   std::span<const ParamVector> prev_thetas,
                                   std::span<const double> prev_weights,
                                   const ProposalSpec& mutation, const Model& model);

/// Effective sample size 1 / sum w_i^2 of normalized weights.
double ess(std::span<const double> weights);

/// Normalizes log weights in place (log of normalized weights) and returns
/// the linear normalized weights. Throws WeightCollapse if all are -inf.
std::vector<double> normalize_log_weights(std::span<double> log_weights, std::size_t step);

/// Ancestor indices from systematic resampling with offset u in (0, 1).
std::vector<std::size_t> systematic_ancestors(std::span<const double> weights, double u);

/// N offspring by systematic resampling; weights reset to 1/N.
ParticleSystem resample_systematic(const ParticleSystem& system, RandomStream& rng);

struct SmcSettings {
  std::size_t S = 1;
  std::size_t N = 1000;
  SmcVariant variant = SmcVariant::joint_mcmc_move;
  /// Particle rejection threshold c in (0, 1): normalized weights below c/N are
  /// dropped with probability 1 - w N / c, survivors raised to c/N.
  /// Only valid for backward_kernel.
  std::optional<double> rejection_threshold;
  ProposalSpec mutation;
  double ess_threshold = 0.5;
  int threads = 1;
};

struct SmcStepReport {
  std::size_t step;
  double h;
  double ess;       ///< after reweighting, before resampling
  bool resampled;
  double acceptance_rate; ///< MCMC move acceptance (joint_mcmc_move), else 0
  std::size_t dropped;    ///< particles removed by rejection thresholding
};

/// Incremental weight bookkeeping of the joint-move variant, for instrumentation.
struct SmcWeightRecord {
  std::size_t step;
  std::size_t particle;
  const Particle& prev;
  const Particle& next;
  double h_new;
  double h_prev;
  double log_incremental;
};

using SmcStepObserver = std::function<void(const SmcStepReport&)>;
using SmcWeightObserver = std::function<void(const SmcWeightRecord&)>;

struct SmcOutput {
  SmcVariant variant = SmcVariant::joint_mcmc_move;
  ParticleSystem system;
  std::vector<SmcStepReport> steps;
};

/// Likelihood-free SMC sampler over a decreasing bandwidth schedule.
/// problem.kernel supplies the kernel kind and distance; its bandwidth is
/// replaced by the schedule. Randomness comes from substreams keyed by
/// (seed, tag, particle, step), so results do not depend on threads.
SmcOutput run_smc(const Problem& problem, const BandwidthSchedule& schedule,
                  const SmcSettings& settings, std::uint64_t seed,
                  const SmcStepObserver& on_step = {}, const SmcWeightObserver& on_weight = {});

} // namespace lfs
