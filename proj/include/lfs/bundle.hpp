#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace lfs {

using ParamVector = std::vector<double>;
using SummaryVector = std::vector<double>;

/// S simulated summary vectors t^1..t^S attached to one parameter value.
/// Stored row-major in one buffer; row s is summary t^{s+1}.
class AuxiliaryBundle {
public:
  AuxiliaryBundle() = default;
  AuxiliaryBundle(std::size_t size, std::size_t dim) : dim_(dim), values_(size * dim, 0.0) {}

  std::size_t size() const noexcept { return dim_ == 0 ? 0 : values_.size() / dim_; }
  std::size_t dim() const noexcept { return dim_; }
  bool empty() const noexcept { return values_.empty(); }

  std::span<const double> operator[](std::size_t s) const {
    return {values_.data() + s * dim_, dim_};
  }
  std::span<double> operator[](std::size_t s) { return {values_.data() + s * dim_, dim_}; }

  std::span<const double> flat() const noexcept { return values_; }

  bool operator==(const AuxiliaryBundle&) const = default;

private:
  std::size_t dim_ = 0;
  std::vector<double> values_;
};

} // namespace lfs
