#include "dfv/numcore/rng.hpp"

#include <cmath>
#include <numbers>

#include "dfv/numcore/error.hpp"

namespace dfv {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

// 53 random bits -> [0, 1).
inline double to_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
  return static_cast<double>(bits) * 0x1.0p-53;
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) noexcept {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

std::array<std::uint32_t, 4> RngStream::block(std::uint64_t call, std::uint64_t index) const noexcept {
  // Counter words: element block, call index, stream id (two words). Key: seed.
  const std::array<std::uint32_t, 4> ctr = {
      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(call),
      static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
  const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(seed_),
                                            static_cast<std::uint32_t>(seed_ >> 32)};
  return philox4x32(ctr, key);
}

Grid RngStream::gaussian_at(std::uint64_t call, const Extents& dims) const {
  Grid out(dims);
  const std::size_t n = out.size();
  for (std::size_t b = 0; 2 * b < n; ++b) {
    const auto w = block(call, b);
    // Box-Muller on one (u1, u2) pair yields two normals.
    const double u1 = 1.0 - to_unit(w[0], w[1]);  // (0, 1]
    const double u2 = to_unit(w[2], w[3]);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    out[2 * b] = r * std::cos(angle);
    if (2 * b + 1 < n) out[2 * b + 1] = r * std::sin(angle);
  }
  return out;
}

Grid RngStream::gaussian(const Extents& dims) { return gaussian_at(call_++, dims); }

std::vector<double> RngStream::uniform_at(std::uint64_t call, std::size_t count) const {
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto w = block(call, i / 2);
    out[i] = (i % 2 == 0) ? to_unit(w[0], w[1]) : to_unit(w[2], w[3]);
  }
  return out;
}

std::vector<double> RngStream::uniform(std::size_t count) { return uniform_at(call_++, count); }

std::uint64_t RngStream::below(std::uint64_t bound) {
  if (bound == 0) fail(ErrorKind::Parameter, "RngStream::below needs a positive bound");
  const auto w = block(call_++, 0);
  const std::uint64_t bits = (static_cast<std::uint64_t>(w[0]) << 32) | w[1];
  // Multiply-shift maps 64 random bits into [0, bound) without a modulo loop.
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(bits) * bound) >> 64);
}

Grid gaussian_draw(RngStream& rng, const Extents& dims) { return rng.gaussian(dims); }

}  // namespace dfv
