#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "sflick/core.hpp"

namespace sflick {

// SFLK layout (all little-endian):
//   0..7   magic "SINOFLK\0"
//   8..11  version u32 (= 1)
//   12..15 kind u32 (0 image, 1 sinogram, 2 network checkpoint)
//   16..19 rows u32, 20..23 cols u32
//   24..31 spacing_row f64, 32..39 spacing_col f64
//   40..43 unit u32, 44..63 zero
//   64..   rows*cols f32 row-major
// Version 1 carries no metadata block beyond the header.

inline constexpr std::size_t kContainerHeaderBytes = 64;
inline constexpr std::uint32_t kContainerVersion = 1;

enum class Kind : std::uint32_t { image = 0, sinogram = 1, checkpoint = 2 };

struct ContainerHeader {
  Kind kind = Kind::image;
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  double spacing_row = 0.0;
  double spacing_col = 0.0;
  Unit unit = Unit::relative_intensity;

  friend bool operator==(const ContainerHeader&, const ContainerHeader&) = default;
};

struct Container {
  ContainerHeader header;
  std::vector<float> payload;
};

std::uint64_t container_file_size(std::uint32_t rows, std::uint32_t cols);

std::vector<unsigned char> encode_container(const ContainerHeader& h, std::span<const double> values);
Container decode_container(std::span<const unsigned char> bytes);

void write_container(const std::filesystem::path& path, const ContainerHeader& h,
                     std::span<const double> values);
Container read_container(const std::filesystem::path& path);

void save_sinogram(const std::filesystem::path& path, const Sinogram& s);
void save_image(const std::filesystem::path& path, const Image& img);

/// The returned geometry carries views, detectors and detector spacing only.
Sinogram load_sinogram(const std::filesystem::path& path);
Image load_image(const std::filesystem::path& path);

Sinogram to_sinogram(const Container& c);
Image to_image(const Container& c);

}  // namespace sflick
