#pragma once

#include <array>
#include <cstdint>

namespace seb {

// xoshiro256** seeded through splitmix64. Streams depend only on the seed,
// never on the platform's standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  // Independent stream keyed by (seed, tag, index), e.g. one per order id.
  static Rng substream(std::uint64_t seed, std::uint64_t tag, std::uint64_t index);

  std::uint64_t next_u64();
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  // Uniform integer in [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n);
  // Standard normal via Box-Muller; consumes two uniforms per call.
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }

  std::uint64_t seed() const noexcept { return seed_; }

 private:
  std::uint64_t seed_;
  std::array<std::uint64_t, 4> s_{};
};

std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace seb
