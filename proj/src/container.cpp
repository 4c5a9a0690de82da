#include "sflick/container.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace sflick {
namespace {

static_assert(std::numeric_limits<float>::is_iec559 && sizeof(float) == 4);
static_assert(std::numeric_limits<double>::is_iec559 && sizeof(double) == 8);

constexpr char kMagic[8] = {'S', 'I', 'N', 'O', 'F', 'L', 'K', '\0'};

template <typename T>
void put_le(unsigned char* dst, T value) {
  auto bits = std::bit_cast<std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) dst[i] = static_cast<unsigned char>(bits >> (8 * i));
}

template <typename T>
T get_le(const unsigned char* src) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<U>(src[i]) << (8 * i);
  return std::bit_cast<T>(bits);
}

}  // namespace

std::uint64_t container_file_size(std::uint32_t rows, std::uint32_t cols) {
  return kContainerHeaderBytes + 4ULL * rows * cols;
}

std::vector<unsigned char> encode_container(const ContainerHeader& h, std::span<const double> values) {
  if (values.size() != static_cast<std::size_t>(h.rows) * h.cols)
    throw Error(ErrorCode::dims_mismatch, "payload size does not match header dimensions");
  std::vector<unsigned char> out(container_file_size(h.rows, h.cols), 0);
  std::memcpy(out.data(), kMagic, 8);
  put_le<std::uint32_t>(&out[8], kContainerVersion);
  put_le<std::uint32_t>(&out[12], static_cast<std::uint32_t>(h.kind));
  put_le<std::uint32_t>(&out[16], h.rows);
  put_le<std::uint32_t>(&out[20], h.cols);
  put_le<double>(&out[24], h.spacing_row);
  put_le<double>(&out[32], h.spacing_col);
  put_le<std::uint32_t>(&out[40], static_cast<std::uint32_t>(h.unit));
  unsigned char* p = out.data() + kContainerHeaderBytes;
  for (double v : values) {
    const auto f = static_cast<float>(v);
    if (!std::isfinite(f)) throw Error(ErrorCode::non_finite, "non-finite data");
    put_le<float>(p, f);
    p += 4;
  }
  return out;
}

Container decode_container(std::span<const unsigned char> bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 8) != 0)
    throw Error(ErrorCode::bad_magic, "bad magic");
  if (bytes.size() < kContainerHeaderBytes)
    throw Error(ErrorCode::truncated_payload, "truncated header");
  const auto version = get_le<std::uint32_t>(&bytes[8]);
  if (version != kContainerVersion)
    throw Error(ErrorCode::unsupported_version, "unsupported version " + std::to_string(version));

  Container c;
  const auto kind = get_le<std::uint32_t>(&bytes[12]);
  if (kind > 2) throw Error(ErrorCode::kind_mismatch, "unknown kind " + std::to_string(kind));
  c.header.kind = static_cast<Kind>(kind);
  c.header.rows = get_le<std::uint32_t>(&bytes[16]);
  c.header.cols = get_le<std::uint32_t>(&bytes[20]);
  c.header.spacing_row = get_le<double>(&bytes[24]);
  c.header.spacing_col = get_le<double>(&bytes[32]);
  const auto unit = get_le<std::uint32_t>(&bytes[40]);
  if (unit > 2) throw Error(ErrorCode::unit_mismatch, "unknown unit " + std::to_string(unit));
  c.header.unit = static_cast<Unit>(unit);

  const std::uint64_t expected = container_file_size(c.header.rows, c.header.cols);
  if (bytes.size() < expected) throw Error(ErrorCode::truncated_payload, "truncated payload");

  const std::size_t n = static_cast<std::size_t>(c.header.rows) * c.header.cols;
  c.payload.resize(n);
  const unsigned char* p = bytes.data() + kContainerHeaderBytes;
  for (std::size_t i = 0; i < n; ++i, p += 4) c.payload[i] = get_le<float>(p);
  return c;
}

void write_container(const std::filesystem::path& path, const ContainerHeader& h,
                     std::span<const double> values) {
  const auto bytes = encode_container(h, values);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::io, "write failed: " + path.string());
}

Container read_container(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_container(bytes);
}

void save_sinogram(const std::filesystem::path& path, const Sinogram& s) {
  ContainerHeader h;
  h.kind = Kind::sinogram;
  h.rows = static_cast<std::uint32_t>(s.data.rows());
  h.cols = static_cast<std::uint32_t>(s.data.cols());
  h.spacing_row = s.geometry.view_step_deg();
  h.spacing_col = s.geometry.det_spacing;
  h.unit = Unit::relative_intensity;
  write_container(path, h, s.data.values());
}

void save_image(const std::filesystem::path& path, const Image& img) {
  ContainerHeader h;
  h.kind = Kind::image;
  h.rows = h.cols = static_cast<std::uint32_t>(img.size());
  h.spacing_row = h.spacing_col = img.pixel_spacing;
  h.unit = img.unit;
  write_container(path, h, img.data.values());
}

namespace {
Matrix to_matrix(const Container& c) {
  std::vector<double> v(c.payload.begin(), c.payload.end());
  return Matrix(c.header.rows, c.header.cols, std::move(v));
}
}  // namespace

Sinogram to_sinogram(const Container& c) {
  if (c.header.kind != Kind::sinogram) throw Error(ErrorCode::kind_mismatch, "expected a sinogram container");
  ScanGeometry g;
  g.n_views = static_cast<int>(c.header.rows);
  g.n_dets = static_cast<int>(c.header.cols);
  g.det_spacing = c.header.spacing_col;
  if (g.n_views > 0 && std::abs(c.header.spacing_row - g.view_step_deg()) > 1e-9 * g.view_step_deg())
    throw Error(ErrorCode::invalid_argument, "view step does not cover a full circle");
  if (!(g.det_spacing > 0.0)) throw Error(ErrorCode::invalid_argument, "detector spacing must be positive");
  return Sinogram(g, to_matrix(c));
}

Image to_image(const Container& c) {
  if (c.header.kind != Kind::image) throw Error(ErrorCode::kind_mismatch, "expected an image container");
  if (c.header.rows != c.header.cols) throw Error(ErrorCode::dims_mismatch, "image must be square");
  return Image(c.header.spacing_row, c.header.unit, to_matrix(c));
}

Sinogram load_sinogram(const std::filesystem::path& path) { return to_sinogram(read_container(path)); }
Image load_image(const std::filesystem::path& path) { return to_image(read_container(path)); }

}  // namespace sflick
