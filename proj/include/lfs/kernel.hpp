#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lfs/bundle.hpp"

namespace lfs {

enum class KernelKind { uniform, epanechnikov, gaussian };

std::string_view to_string(KernelKind kind);
KernelKind parse_kernel_kind(std::string_view name);

/// Reduces a summary difference vector to a scalar distance. With no weights
/// this is the Euclidean norm; otherwise sqrt(sum_j w_j u_j^2).
class SummaryDistance {
public:
  SummaryDistance() = default;
  explicit SummaryDistance(std::vector<double> weights);

  double norm(std::span<const double> u) const;
  double operator()(std::span<const double> a, std::span<const double> b) const;

  bool weighted() const noexcept { return !weights_.empty(); }
  const std::vector<double>& weights() const noexcept { return weights_; }

  bool operator==(const SummaryDistance&) const = default;

private:
  std::vector<double> weights_;
};

/// Smoothing kernel K_h: a standard 1-D profile applied to distance / h.
///
///   uniform       1/(2h)              for d <= 1
///   epanechnikov  3/(4h) (1 - d^2)    for d <= 1
///   gaussian      exp(-d^2/2) / (h sqrt(2 pi))
///
/// The 1-D normalizing constants are kept so that, for scalar summaries,
/// K_h is a proper density and integrals against f(t|theta) are genuine
/// convolutions.
class SmoothingKernel {
public:
  SmoothingKernel(KernelKind kind, double bandwidth, SummaryDistance distance = {});

  KernelKind kind() const noexcept { return kind_; }
  double bandwidth() const noexcept { return h_; }
  const SummaryDistance& distance() const noexcept { return distance_; }

  /// Same kernel with a different bandwidth.
  SmoothingKernel with_bandwidth(double h) const;

  /// Kernel value at scalar distance d >= 0.
  double at_distance(double d) const;
  double log_at_distance(double d) const;

  /// K_h(u) for a summary difference u.
  double evaluate(std::span<const double> u) const;
  double log_evaluate(std::span<const double> u) const;

  /// K_h(t_y - t) without materialising the difference.
  double between(std::span<const double> observed, std::span<const double> simulated) const;
  double log_between(std::span<const double> observed, std::span<const double> simulated) const;

  /// Arithmetic mean of K_h(t_y - t^s) over the bundle.
  double pooled_evaluate(std::span<const double> observed, const AuxiliaryBundle& bundle) const;
  /// log of pooled_evaluate, computed with log-sum-exp; -inf when every term is zero.
  double log_pooled_evaluate(std::span<const double> observed, const AuxiliaryBundle& bundle) const;

  /// K_h(0), the maximum of the kernel.
  double sup_value() const;
  double log_sup_value() const;

  bool operator==(const SmoothingKernel&) const = default;

private:
  KernelKind kind_;
  double h_;
  SummaryDistance distance_;
};

} // namespace lfs
