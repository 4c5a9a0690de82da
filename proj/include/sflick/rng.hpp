#pragma once

#include <cstdint>

namespace sflick {

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Seed for an independent child stream: splitmix64(parent ^ stream_index).
inline std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream_index) noexcept {
  return splitmix64(parent ^ stream_index);
}

/// PCG32 (XSH-RR, 64-bit state) following the reference pcg_basic routines.
///
/// Derived draws:
///   uniform_u(b)  rejection sampling on 32-bit outputs (64-bit pairs when b > 2^32)
///   uniform()     53 bits from two outputs, (hi << 32 | lo) >> 11, scaled by 2^-53
///   normal()      Box-Muller on uniform(); the second variate of each pair is cached
class Pcg32 {
 public:
  static constexpr std::uint64_t default_stream = 721347520444481703ULL;

  explicit Pcg32(std::uint64_t seed) : Pcg32(seed, default_stream) {}
  Pcg32(std::uint64_t initstate, std::uint64_t initseq) noexcept;

  std::uint32_t next_u32() noexcept;
  std::uint64_t uniform_u(std::uint64_t bound) noexcept;
  double uniform() noexcept;
  double normal() noexcept;

 private:
  std::uint64_t state_ = 0;
  std::uint64_t inc_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace sflick
