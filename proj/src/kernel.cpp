#include "lfs/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "lfs/errors.hpp"

namespace lfs {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_bundle(std::span<const double> observed, const AuxiliaryBundle& bundle) {
  if (bundle.empty()) throw ConfigError("pooled kernel needs a nonempty bundle (S >= 1)");
  if (bundle.dim() != observed.size())
    throw ConfigError("bundle summary dimension does not match the observed summaries");
}

} // namespace

std::string_view to_string(KernelKind kind) {
  switch (kind) {
  case KernelKind::uniform: return "uniform";
  case KernelKind::epanechnikov: return "epanechnikov";
  case KernelKind::gaussian: return "gaussian";
  }
  return "unknown";
}

KernelKind parse_kernel_kind(std::string_view name) {
  if (name == "uniform") return KernelKind::uniform;
  if (name == "epanechnikov") return KernelKind::epanechnikov;
  if (name == "gaussian") return KernelKind::gaussian;
  throw ConfigError("unknown kernel '" + std::string(name) +
                    "' (expected uniform|epanechnikov|gaussian)");
}

SummaryDistance::SummaryDistance(std::vector<double> weights) : weights_(std::move(weights)) {
  for (double w : weights_)
    if (!(w > 0.0) || !std::isfinite(w))
      throw ConfigError("summary distance weights must be positive and finite");
}

double SummaryDistance::norm(std::span<const double> u) const {
  double sum = 0.0;
  if (weights_.empty()) {
    for (double x : u) sum += x * x;
  } else {
    if (weights_.size() != u.size())
      throw ConfigError("summary distance weight count does not match summary dimension");
    for (std::size_t j = 0; j < u.size(); ++j) sum += weights_[j] * u[j] * u[j];
  }
  return std::sqrt(sum);
}

double SummaryDistance::operator()(std::span<const double> a, std::span<const double> b) const {
  if (a.size() != b.size())
    throw DomainError("summary vectors differ in dimension");
  if (a.size() == 1 && weights_.empty()) return std::fabs(a[0] - b[0]);
  if (!weights_.empty() && weights_.size() != a.size())
    throw ConfigError("summary distance weight count does not match summary dimension");
  double sum = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double diff = a[j] - b[j];
    sum += (weights_.empty() ? 1.0 : weights_[j]) * diff * diff;
  }
  return std::sqrt(sum);
}

SmoothingKernel::SmoothingKernel(KernelKind kind, double bandwidth, SummaryDistance distance)
    : kind_(kind), h_(bandwidth), distance_(std::move(distance)) {
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth))
    throw ConfigError("kernel bandwidth h must be positive and finite");
}

SmoothingKernel SmoothingKernel::with_bandwidth(double h) const {
  return SmoothingKernel(kind_, h, distance_);
}

double SmoothingKernel::at_distance(double d) const {
  const double x = d / h_;
  switch (kind_) {
  case KernelKind::uniform: return x <= 1.0 ? 0.5 / h_ : 0.0;
  case KernelKind::epanechnikov: return x <= 1.0 ? 0.75 / h_ * (1.0 - x * x) : 0.0;
  case KernelKind::gaussian:
    return std::exp(-0.5 * x * x) * std::numbers::inv_sqrtpi / (std::numbers::sqrt2 * h_);
  }
  return 0.0;
}

double SmoothingKernel::log_at_distance(double d) const {
  const double x = d / h_;
  switch (kind_) {
  case KernelKind::uniform: return x <= 1.0 ? -std::log(2.0 * h_) : kNegInf;
  case KernelKind::epanechnikov:
    return x < 1.0 ? std::log(0.75 / h_) + std::log1p(-x * x) : kNegInf;
  case KernelKind::gaussian:
    return -0.5 * x * x - std::log(h_) - 0.5 * std::log(2.0 * std::numbers::pi);
  }
  return kNegInf;
}

double SmoothingKernel::evaluate(std::span<const double> u) const {
  return at_distance(distance_.norm(u));
}

double SmoothingKernel::log_evaluate(std::span<const double> u) const {
  return log_at_distance(distance_.norm(u));
}

double SmoothingKernel::between(std::span<const double> observed,
                                std::span<const double> simulated) const {
  return at_distance(distance_(observed, simulated));
}

double SmoothingKernel::log_between(std::span<const double> observed,
                                    std::span<const double> simulated) const {
  return log_at_distance(distance_(observed, simulated));
}

double SmoothingKernel::pooled_evaluate(std::span<const double> observed,
                                        const AuxiliaryBundle& bundle) const {
  check_bundle(observed, bundle);
  double sum = 0.0;
  for (std::size_t s = 0; s < bundle.size(); ++s) sum += between(observed, bundle[s]);
  return sum / static_cast<double>(bundle.size());
}

double SmoothingKernel::log_pooled_evaluate(std::span<const double> observed,
                                            const AuxiliaryBundle& bundle) const {
  check_bundle(observed, bundle);
  const std::size_t n = bundle.size();
  if (n == 1) return log_between(observed, bundle[0]);

  // Compact-support profiles do not underflow; the linear mean is fine.
  if (kind_ != KernelKind::gaussian) {
    const double mean = pooled_evaluate(observed, bundle);
    return mean > 0.0 ? std::log(mean) : kNegInf;
  }

  double max_log = kNegInf;
  for (std::size_t s = 0; s < n; ++s) {
    const double d = distance_(observed, bundle[s]) / h_;
    max_log = std::max(max_log, -0.5 * d * d);
  }
  double sum = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    const double d = distance_(observed, bundle[s]) / h_;
    sum += std::exp(-0.5 * d * d - max_log);
  }
  return max_log + std::log(sum / static_cast<double>(n)) - std::log(h_) -
         0.5 * std::log(2.0 * std::numbers::pi);
}

double SmoothingKernel::sup_value() const { return at_distance(0.0); }

double SmoothingKernel::log_sup_value() const { return log_at_distance(0.0); }

} // namespace lfs
