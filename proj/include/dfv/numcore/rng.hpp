#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "dfv/numcore/grid.hpp"

namespace dfv {

/// Philox4x32 with 10 rounds (Salmon et al., "Parallel random numbers: as
/// easy as 1, 2, 3"). Pure function of (counter, key).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) noexcept;

/// Counter-based random stream. A draw is addressed by (seed, stream id,
/// call index, element index), so any draw can be replayed without storing
/// it: two editing branches that ask for the same call index see the same
/// noise, and re-running a pipeline reproduces it bit for bit.
///
/// The member functions without an explicit call index consume the next
/// call index; the `_at` variants are const and stateless.
class RngStream {
 public:
  static constexpr std::string_view kAlgorithm = "philox4x32-10";

  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0) noexcept
      : seed_(seed), stream_(stream) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }
  std::uint64_t next_call() const noexcept { return call_; }

  /// Same seed, different stream id: an independent sequence.
  RngStream fork(std::uint64_t stream) const noexcept { return RngStream(seed_, stream); }

  Grid gaussian(const Extents& dims);
  Grid gaussian_at(std::uint64_t call, const Extents& dims) const;

  /// Uniform doubles in [0, 1).
  std::vector<double> uniform(std::size_t count);
  std::vector<double> uniform_at(std::uint64_t call, std::size_t count) const;

  /// Uniform integer in [0, bound); bound must be positive.
  std::uint64_t below(std::uint64_t bound);

 private:
  std::array<std::uint32_t, 4> block(std::uint64_t call, std::uint64_t index) const noexcept;

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t call_ = 0;
};

/// i.i.d. standard-normal grid; consumes one call index of `rng`.
Grid gaussian_draw(RngStream& rng, const Extents& dims);

}  // namespace dfv
