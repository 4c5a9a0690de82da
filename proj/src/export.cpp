#include "sflick/export.hpp"

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

namespace sflick {

std::uint16_t window_to_u16(double value, double lo, double hi) {
  const double t = (value - lo) / (hi - lo);
  const double v = std::round(t * 65535.0);
  if (!(v > 0.0)) return 0;  // also catches NaN
  if (v >= 65535.0) return 65535;
  return static_cast<std::uint16_t>(v);
}

void write_pgm16(const std::filesystem::path& path, const Image& hu, double lo, double hi) {
  if (hu.unit != Unit::hu) throw Error(ErrorCode::unit_mismatch, "PGM export expects an HU image");
  if (!(hi > lo)) throw Error(ErrorCode::invalid_argument, "display window must satisfy lo < hi");
  const int n = hu.size();
  const std::string header = "P5\n" + std::to_string(n) + " " + std::to_string(n) + "\n65535\n";
  std::vector<unsigned char> buf;
  buf.reserve(header.size() + 2ULL * n * n);
  buf.insert(buf.end(), header.begin(), header.end());
  for (double v : hu.data.values()) {
    const std::uint16_t q = window_to_u16(v, lo, hi);
    buf.push_back(static_cast<unsigned char>(q >> 8));
    buf.push_back(static_cast<unsigned char>(q & 0xff));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw Error(ErrorCode::io, "write failed: " + path.string());
}

}  // namespace sflick
