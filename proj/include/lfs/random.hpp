#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <random>

namespace lfs {

/// Philox4x32 block function with 10 rounds.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key);

/// Module tags used to separate substreams that share a seed.
enum class StreamTag : std::uint32_t {
  rejection = 1,
  mcmc = 2,
  smc_init = 3,
  smc_move = 4,
  smc_resample = 5,
  smc_threshold = 6,
  experiment = 7,
  bootstrap = 8,
  permutation = 9,
  test = 10,
};

/// Counter-based random stream addressed by (seed, tag, index, step).
///
/// The key is derived from (seed, tag, high bits of index); the Philox counter
/// carries (block, low bits of index, step). Two streams with different
/// addresses never share a counter/key pair, so substreams can be created in
/// any order on any thread and still produce the same values.
///
/// Satisfies UniformRandomBitGenerator, so it can drive <random>
/// distributions directly.
class RandomStream {
public:
  using result_type = std::uint64_t;

  explicit RandomStream(std::uint64_t seed, StreamTag tag = StreamTag::test,
                        std::uint64_t index = 0, std::uint32_t step = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Uniform on the open interval (0, 1).
  double uniform();
  double normal() { return normal_(*this); }
  double normal(double mean, double sd) { return mean + sd * normal_(*this); }
  int binomial(int trials, double p);

private:
  void refill();

  std::array<std::uint32_t, 2> key_{};
  std::uint64_t block_ = 0;
  std::uint32_t index_lo_ = 0;
  std::uint32_t step_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

} // namespace lfs
