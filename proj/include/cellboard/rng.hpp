#pragma once

// Philox4x32-10 counter-based generator. Every random number used by a
// chain is a pure function of (seed, chain, sweep, site), so results do not
// depend on scheduling or on how chains are split across threads.

#include <array>
#include <cstdint>

namespace cellboard {

class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kW0;
        key[1] += kW1;
      }
      const std::uint64_t p0 = std::uint64_t{kM0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kM1} * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kM0 = 0xD2511F53;
  static constexpr std::uint32_t kM1 = 0xCD9E8D57;
  static constexpr std::uint32_t kW0 = 0x9E3779B9;
  static constexpr std::uint32_t kW1 = 0xBB67AE85;
};

// Uniform doubles keyed by (chain, sweep, site) under a fixed seed.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint32_t chain)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)}, chain_(chain) {}

  std::array<std::uint32_t, 4> raw(std::uint64_t sweep, std::uint32_t site) const {
    return Philox4x32::block({chain_, static_cast<std::uint32_t>(sweep), static_cast<std::uint32_t>(sweep >> 32), site},
                             key_);
  }

  // In [0, 1) with 53 random bits.
  double uniform(std::uint64_t sweep, std::uint32_t site) const {
    const auto r = raw(sweep, site);
    const std::uint64_t bits = (std::uint64_t{r[0]} << 32 | r[1]) >> 11;
    return static_cast<double>(bits) * 0x1.0p-53;
  }

  // Sweep index reserved for initial states.
  static constexpr std::uint64_t kInitSweep = ~std::uint64_t{0};

 private:
  Philox4x32::Key key_;
  std::uint32_t chain_;
};

}  // namespace cellboard
