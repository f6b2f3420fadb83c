#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace lfs {

// Invalid configuration or arguments (CLI exit code 2).
class ConfigError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// Parameter outside the prior support handed to the simulator.
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

// Requested functionality is not available for this (model, kernel) pair.
class CapabilityError : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

// A sampler ran out of its proposal budget (CLI exit code 3).
class BudgetExhausted : public std::runtime_error {
public:
  BudgetExhausted(const std::string& what, std::uint64_t proposals_used, std::size_t accepted)
      : std::runtime_error(what), proposals_used_(proposals_used), accepted_(accepted) {}

  std::uint64_t proposals_used() const noexcept { return proposals_used_; }
  std::size_t accepted() const noexcept { return accepted_; }

private:
  std::uint64_t proposals_used_;
  std::size_t accepted_;
};

// Every particle weight became zero.
class WeightCollapse : public std::runtime_error {
public:
  WeightCollapse(const std::string& what, std::size_t step) : std::runtime_error(what), step_(step) {}

  std::size_t step() const noexcept { return step_; }

private:
  std::size_t step_;
};

} // namespace lfs
