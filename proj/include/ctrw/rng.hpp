#pragma once

// Counter-based random numbers (Philox4x32-10). A stream is addressed by
// (seed, stream id, counter): two draws with the same triple agree bit for
// bit, and distinct path ids never share a block.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace ctrw {

struct RngState {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::uint64_t counter = 0;
};

/// One Philox4x32-10 block.
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t kM0 = 0xD2511F53u;
  constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u;
  constexpr std::uint32_t kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kW0;
    key[1] += kW1;
  }
  return ctr;
}

class Rng {
 public:
  explicit Rng(RngState state) : state_(state) {}
  Rng(std::uint64_t seed, std::uint64_t stream) : state_{seed, stream, 0} {}

  const RngState& state() const noexcept { return state_; }

  std::uint32_t next_u32() {
    if (used_ == 4) refill();
    return block_[used_++];
  }

  /// Uniform on the open interval (0,1) with 53 random bits.
  double uniform() {
    const std::uint64_t hi = next_u32();
    const std::uint64_t lo = next_u32();
    const std::uint64_t bits = ((hi << 32) | lo) >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal by Box-Muller; the second variate is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  void refill() {
    const std::array<std::uint32_t, 4> ctr{
        static_cast<std::uint32_t>(state_.counter), static_cast<std::uint32_t>(state_.counter >> 32),
        static_cast<std::uint32_t>(state_.stream), static_cast<std::uint32_t>(state_.stream >> 32)};
    const std::array<std::uint32_t, 2> key{static_cast<std::uint32_t>(state_.seed),
                                           static_cast<std::uint32_t>(state_.seed >> 32)};
    block_ = philox4x32(ctr, key);
    ++state_.counter;
    used_ = 0;
  }

  RngState state_;
  std::array<std::uint32_t, 4> block_{};
  int used_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace ctrw
