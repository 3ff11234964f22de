#pragma once

#include <string_view>
#include <vector>

#include "dfv/flowcore/provider.hpp"
#include "dfv/numcore/rng.hpp"

namespace dfv::toy {

enum class DatasetKind { MovingSquare, MovingDisc, TwoObject };
enum class ShapeKind { Square, Disc };

std::string_view to_string(DatasetKind k) noexcept;
DatasetKind parse_dataset_kind(std::string_view name);

/// Condition labels used by the toy datasets.
inline constexpr int kSquareLabel = 0;
inline constexpr int kDiscLabel = 1;
inline constexpr int kTwoObjectLabel = 2;

/// Video geometry (F, H, W, D).
struct ClipGeometry {
  std::size_t frames = 8;
  std::size_t height = 16;
  std::size_t width = 16;
  std::size_t channels = 1;

  Extents dims() const { return {frames, height, width, channels}; }
  Extents token_dims() const { return {frames, height, width}; }
  std::size_t tokens() const noexcept { return frames * height * width; }
  friend bool operator==(const ClipGeometry&, const ClipGeometry&) = default;
};

ClipGeometry geometry_of(const Grid& video);

/// Side of the square and diameter of the disc, in pixels.
inline constexpr int kShapeExtent = 6;
inline constexpr int kDiscExtent = 7;

int shape_extent(ShapeKind s) noexcept;
/// Whether pixel (dy, dx) of the shape's bounding box belongs to the shape.
bool shape_covers(ShapeKind s, int dy, int dx) noexcept;

/// A shape translating at a constant integer velocity; (y0, x0) is the top
/// left of its bounding box in frame 0.
struct ShapeTrack {
  ShapeKind shape;
  int y0 = 0;
  int x0 = 0;
  int vy = 0;
  int vx = 0;
};

struct ToyClip {
  Grid video;      // (F, H, W, D), intensities in {0, 1}
  Grid support;    // (F, H, W), 1 where any shape covers the pixel
  flow::ConditionId label;
  std::vector<ShapeTrack> tracks;
};

/// Renders tracks into a clip. Throws Domain if a shape leaves the frame.
ToyClip render_clip(const std::vector<ShapeTrack>& tracks, flow::ConditionId label, const ClipGeometry& geom);

/// `count` clips of the given kind. Clip i draws from stream `i` of `rng`'s
/// seed, so the set is reproducible and a prefix of a larger set.
std::vector<ToyClip> make_toy_dataset(DatasetKind kind, std::size_t count, const RngStream& rng,
                                      const ClipGeometry& geom = {});

/// Nearest-template classifier used as the oracle for generated and edited
/// clips. Each frame is compared against every in-frame placement of a
/// binary square and disc; a class scores the sum over frames of its best
/// per-frame squared error.
struct TemplateMatch {
  ShapeKind shape;
  double square_sse;
  double disc_sse;
};

TemplateMatch classify_clip(const Grid& video);

}  // namespace dfv::toy
