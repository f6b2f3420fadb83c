#include "lfs/random.hpp"

namespace lfs {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(product >> 32);
  lo = static_cast<std::uint32_t>(product);
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

} // namespace

std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

RandomStream::RandomStream(std::uint64_t seed, StreamTag tag, std::uint64_t index,
                           std::uint32_t step)
    : index_lo_(static_cast<std::uint32_t>(index)), step_(step) {
  std::uint64_t k = splitmix64(seed);
  k = splitmix64(k ^ (static_cast<std::uint64_t>(tag) << 32 | (index >> 32)));
  key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
}

void RandomStream::refill() {
  buffer_ = philox4x32_10({static_cast<std::uint32_t>(block_),
                           static_cast<std::uint32_t>(block_ >> 32), index_lo_, step_},
                          key_);
  ++block_;
  used_ = 0;
}

RandomStream::result_type RandomStream::operator()() {
  if (used_ > 2) refill();
  const std::uint64_t hi = buffer_[used_];
  const std::uint64_t lo = buffer_[used_ + 1];
  used_ += 2;
  return hi << 32 | lo;
}

double RandomStream::uniform() {
  return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

int RandomStream::binomial(int trials, double p) {
  std::binomial_distribution<int> dist(trials, p);
  return dist(*this);
}

} // namespace lfs
