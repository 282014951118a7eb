#pragma once

#include <cstdint>
#include <random>

namespace dprag {

// Seeded random stream shared by every mechanism. std::mt19937_64 is fully
// specified by the standard, and uniform() is built from raw engine output
// rather than std::uniform_real_distribution, so a seed replays bit-for-bit
// across standard libraries.
//
// Not thread-safe; each query owns its own stream.
class RngState {
 public:
  explicit RngState(std::uint64_t seed);

  // Production default: seed drawn from std::random_device.
  static RngState from_entropy();

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform();

  // Child stream for sub-task `index` (see derive_seed).
  RngState split(std::uint64_t index) const {
    return RngState(derive_seed(seed_, index));
  }

  // Splitting rule: splitmix64(seed + (index + 1) * 0x9E3779B97F4A7C15).
  static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace dprag
