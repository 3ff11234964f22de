#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "dfv/numcore/grid.hpp"

namespace dfv {

// DFVT binary layout, all integers little-endian:
//   "DFVT" | u16 version (=1) | u8 dtype (1 = float32) | u8 ndim | ndim x u32 dims
//   | row-major float32 payload
inline constexpr std::uint16_t kDfvtVersion = 1;
inline constexpr std::uint8_t kDfvtFloat32 = 1;

void write_dfvt(std::ostream& out, const Grid& grid);
Grid read_dfvt(std::istream& in);

void save_dfvt(const std::filesystem::path& path, const Grid& grid);
Grid load_dfvt(const std::filesystem::path& path);

/// Encoded bytes of `grid`, handy for checksums.
std::vector<unsigned char> encode_dfvt(const Grid& grid);

}  // namespace dfv
