#include "io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "config.hpp"
#include "dfv/numcore/dfvt.hpp"
#include "dfv/numcore/error.hpp"

#ifndef DFV_VERSION
#define DFV_VERSION "unknown"
#endif

namespace dfv::cli {

std::string hex64(std::uint64_t v) { return fmt::format("{:016x}", v); }

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path.string() + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) fail(ErrorKind::Io, "cannot write '" + path.string() + "'");
}

std::string encode_frame(const Grid& video, std::size_t frame) {
  if (video.rank() != 4) fail(ErrorKind::Shape, "frames are exported from (F, H, W, C) videos");
  const auto& d = video.dims();
  const std::size_t H = d[1], W = d[2], C = d[3];
  if (C != 1 && C != 3) fail(ErrorKind::Shape, "frame export needs 1 or 3 channels");
  if (frame >= d[0]) fail(ErrorKind::Index, "frame index out of range");
  std::string out = fmt::format("{}\n{} {}\n255\n", C == 1 ? "P5" : "P6", W, H);
  const std::size_t n = H * W * C;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = std::clamp(video[frame * n + i], 0.0, 1.0);
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::floor(v * 255.0 + 0.5))));
  }
  return out;
}

std::vector<std::string> write_frames(const std::filesystem::path& dir, const Grid& video) {
  std::vector<std::string> names;
  for (std::size_t f = 0; f < video.dims().at(0); ++f) {
    const std::string name = fmt::format("frame_{:03d}.{}", f, video.dims().back() == 1 ? "pgm" : "ppm");
    write_file(dir / name, encode_frame(video, f));
    names.push_back(name);
  }
  return names;
}

Grid read_pgm(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  std::istringstream in(bytes);
  auto token = [&] {
    std::string t;
    while (in >> std::ws && in.peek() == '#') std::getline(in, t);
    in >> t;
    return t;
  };
  if (token() != "P5") fail(ErrorKind::Format, path.string() + ": not a binary PGM (P5)");
  std::size_t w = 0, h = 0, maxval = 0;
  try {
    w = std::stoul(token());
    h = std::stoul(token());
    maxval = std::stoul(token());
  } catch (const std::exception&) {
    fail(ErrorKind::Format, path.string() + ": malformed PGM header");
  }
  if (w == 0 || h == 0 || maxval == 0 || maxval > 255) fail(ErrorKind::Format, path.string() + ": unsupported PGM header");
  in.get();  // single whitespace before the raster
  const auto offset = static_cast<std::size_t>(in.tellg());
  if (bytes.size() < offset + w * h) fail(ErrorKind::Format, path.string() + ": truncated PGM raster");
  Grid g({h, w});
  for (std::size_t i = 0; i < w * h; ++i) g[i] = static_cast<unsigned char>(bytes[offset + i]);
  return g;
}

Grid load_mask(const std::filesystem::path& path, std::size_t frames) {
  if (!std::filesystem::exists(path)) fail(ErrorKind::Io, "mask file '" + path.string() + "' does not exist");
  if (path.extension() == ".pgm") {
    const Grid img = read_pgm(path);
    const std::size_t h = img.dims()[0], w = img.dims()[1];
    Grid m({frames, h, w});
    for (std::size_t f = 0; f < frames; ++f)
      for (std::size_t i = 0; i < h * w; ++i) m[f * h * w + i] = img[i] >= 128.0 ? 1.0 : 0.0;
    return m;
  }
  Grid g = load_dfvt(path);
  if (g.rank() != 3) fail(ErrorKind::Shape, "mask '" + path.string() + "' must be (F, H, W)");
  for (double& v : g.values()) v = v != 0.0 ? 1.0 : 0.0;
  return g;
}

Manifest::Manifest(std::string command, std::uint64_t config_hash)
    : command_(std::move(command)), config_hash_(config_hash) {}

void Manifest::write(const std::filesystem::path& dir, const std::string& name, const std::string& content,
                     const std::string& canonical) {
  write_file(dir / name, content);
  record(name, canonical.empty() ? content : canonical);
}

void Manifest::record(const std::string& name, const std::string& canonical) {
  files_.emplace_back(name, fnv1a(canonical));
}

void Manifest::save(const std::filesystem::path& dir) const {
  std::string out = "command=" + command_ + "\nversion=" + DFV_VERSION + "\nconfig_hash=" + hex64(config_hash_) + "\n";
  for (const auto& [name, sum] : files_) out += "file." + name + "=" + hex64(sum) + "\n";
  write_file(dir / "manifest.txt", out);
}

}  // namespace dfv::cli
