#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dfv/numcore/grid.hpp"

namespace dfv::cli {

/// One frame of a (F, H, W, C) video as binary PGM (C = 1) or PPM (C = 3).
/// Values are clamped to [0, 1] and scaled to 0..255 rounding half up.
std::string encode_frame(const Grid& video, std::size_t frame);

/// Writes frame_000.pgm ... into `dir`; returns the file names.
std::vector<std::string> write_frames(const std::filesystem::path& dir, const Grid& video);

/// Binary PGM (P5, maxval <= 255) as an (H, W) grid of raw 0..255 values.
Grid read_pgm(const std::filesystem::path& path);

/// Pixel-space mask: a DFVT grid of dims (F, H, W), or one PGM applied to
/// all F frames. Values >= 128 (PGM) or != 0 (DFVT) mark the region.
Grid load_mask(const std::filesystem::path& path, std::size_t frames);

/// Output-file list with FNV-1a checksums. Timing-bearing files are hashed
/// over a canonical form the caller supplies, so reruns reproduce the
/// manifest byte for byte.
class Manifest {
 public:
  Manifest(std::string command, std::uint64_t config_hash);

  /// Writes `content` to dir/name and records it; `canonical` (when
  /// non-empty) is what gets hashed.
  void write(const std::filesystem::path& dir, const std::string& name, const std::string& content,
             const std::string& canonical = {});
  void record(const std::string& name, const std::string& canonical);

  void save(const std::filesystem::path& dir) const;

 private:
  std::string command_;
  std::uint64_t config_hash_;
  std::vector<std::pair<std::string, std::uint64_t>> files_;
};

std::string hex64(std::uint64_t v);
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace dfv::cli
