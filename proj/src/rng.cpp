#include "sflick/rng.hpp"

#include <cmath>
#include <numbers>

namespace sflick {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  std::uint64_t z = x + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Pcg32::Pcg32(std::uint64_t initstate, std::uint64_t initseq) noexcept {
  state_ = 0;
  inc_ = (initseq << 1u) | 1u;
  next_u32();
  state_ += initstate;
  next_u32();
}

std::uint32_t Pcg32::next_u32() noexcept {
  const std::uint64_t old = state_;
  state_ = old * 6364136223846793005ULL + inc_;
  const auto xorshifted = static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
  const auto rot = static_cast<std::uint32_t>(old >> 59u);
  return (xorshifted >> rot) | (xorshifted << ((-rot) & 31u));
}

std::uint64_t Pcg32::uniform_u(std::uint64_t bound) noexcept {
  if (bound <= 1) return 0;
  if (bound <= 0x100000000ULL) {
    const auto b = static_cast<std::uint32_t>(bound);  // 2^32 wraps to 0
    if (b == 0) return next_u32();
    const std::uint32_t threshold = (0u - b) % b;
    for (;;) {
      const std::uint32_t r = next_u32();
      if (r >= threshold) return r % b;
    }
  }
  const std::uint64_t threshold = (0ULL - bound) % bound;
  for (;;) {
    const std::uint64_t hi = next_u32();
    const std::uint64_t r = (hi << 32) | next_u32();
    if (r >= threshold) return r % bound;
  }
}

double Pcg32::uniform() noexcept {
  const std::uint64_t hi = next_u32();
  const std::uint64_t bits = ((hi << 32) | next_u32()) >> 11;
  return static_cast<double>(bits) * 0x1.0p-53;
}

double Pcg32::normal() noexcept {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

}  // namespace sflick
