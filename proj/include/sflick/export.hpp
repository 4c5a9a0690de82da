#pragma once

#include <cstdint>
#include <filesystem>

#include "sflick/core.hpp"

namespace sflick {

inline constexpr double kDisplayWindowLo = -500.0;
inline constexpr double kDisplayWindowHi = 500.0;

/// Linear map [lo, hi] -> [0, 65535], rounded to nearest and clamped.
std::uint16_t window_to_u16(double value, double lo, double hi);

/// 16-bit binary PGM (P5, maxval 65535, big-endian samples) of an HU image.
void write_pgm16(const std::filesystem::path& path, const Image& hu, double lo = kDisplayWindowLo,
                 double hi = kDisplayWindowHi);

}  // namespace sflick
