#include "dfv/numcore/dfvt.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "dfv/numcore/error.hpp"

namespace dfv {

namespace {

void put_u16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xFF));
  out.push_back(static_cast<unsigned char>(v >> 8));
}

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void read_exact(std::istream& in, unsigned char* dst, std::size_t n, const char* what) {
  in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    fail(ErrorKind::Format, std::string("truncated DFVT stream while reading ") + what);
  }
}

}  // namespace

std::vector<unsigned char> encode_dfvt(const Grid& grid) {
  if (grid.empty()) fail(ErrorKind::InvalidDimension, "cannot encode an empty grid");
  if (grid.rank() > 255) fail(ErrorKind::InvalidDimension, "rank exceeds 255");
  std::vector<unsigned char> out = {'D', 'F', 'V', 'T'};
  out.reserve(8 + 4 * grid.rank() + 4 * grid.size());
  put_u16(out, kDfvtVersion);
  out.push_back(kDfvtFloat32);
  out.push_back(static_cast<unsigned char>(grid.rank()));
  for (std::size_t d : grid.dims()) {
    if (d > std::numeric_limits<std::uint32_t>::max()) fail(ErrorKind::InvalidDimension, "extent exceeds u32");
    put_u32(out, static_cast<std::uint32_t>(d));
  }
  for (double v : grid.values()) {
    const auto f = static_cast<float>(v);
    if (!std::isfinite(f)) fail(ErrorKind::Domain, "value not representable as finite float32");
    put_u32(out, std::bit_cast<std::uint32_t>(f));
  }
  return out;
}

void write_dfvt(std::ostream& out, const Grid& grid) {
  const auto bytes = encode_dfvt(grid);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::Io, "failed writing DFVT stream");
}

Grid read_dfvt(std::istream& in) {
  unsigned char head[8];
  read_exact(in, head, sizeof head, "header");
  if (std::memcmp(head, "DFVT", 4) != 0) fail(ErrorKind::Format, "bad DFVT magic");
  const std::uint16_t version = static_cast<std::uint16_t>(head[4] | (head[5] << 8));
  if (version != kDfvtVersion) fail(ErrorKind::Format, "unsupported DFVT version " + std::to_string(version));
  if (head[6] != kDfvtFloat32) fail(ErrorKind::Format, "unsupported DFVT dtype code " + std::to_string(head[6]));
  const std::size_t ndim = head[7];
  if (ndim == 0) fail(ErrorKind::Format, "DFVT grid with zero dimensions");

  std::vector<unsigned char> dim_bytes(4 * ndim);
  read_exact(in, dim_bytes.data(), dim_bytes.size(), "dims");
  Extents dims(ndim);
  for (std::size_t i = 0; i < ndim; ++i) dims[i] = get_u32(&dim_bytes[4 * i]);
  const std::size_t n = checked_volume(dims);

  std::vector<unsigned char> payload(4 * n);
  read_exact(in, payload.data(), payload.size(), "payload");
  std::vector<double> values(n);
  for (std::size_t i = 0; i < n; ++i) {
    const float f = std::bit_cast<float>(get_u32(&payload[4 * i]));
    if (!std::isfinite(f)) fail(ErrorKind::Format, "non-finite value in DFVT payload");
    values[i] = f;
  }
  return Grid(std::move(dims), std::move(values));
}

void save_dfvt(const std::filesystem::path& path, const Grid& grid) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  write_dfvt(out, grid);
}

Grid load_dfvt(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  return read_dfvt(in);
}

}  // namespace dfv
