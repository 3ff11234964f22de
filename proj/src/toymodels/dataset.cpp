#include "dfv/toymodels/dataset.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "dfv/numcore/error.hpp"

namespace dfv::toy {

std::string_view to_string(DatasetKind k) noexcept {
  switch (k) {
    case DatasetKind::MovingSquare: return "moving-square";
    case DatasetKind::MovingDisc: return "moving-disc";
    case DatasetKind::TwoObject: return "two-object";
  }
  return "?";
}

DatasetKind parse_dataset_kind(std::string_view name) {
  for (auto k : {DatasetKind::MovingSquare, DatasetKind::MovingDisc, DatasetKind::TwoObject}) {
    if (name == to_string(k)) return k;
  }
  fail(ErrorKind::Kind, "unknown dataset kind '" + std::string(name) + "'");
}

ClipGeometry geometry_of(const Grid& video) {
  if (video.rank() != 4) fail(ErrorKind::Shape, "video grids are (F, H, W, D)");
  const auto& d = video.dims();
  return {d[0], d[1], d[2], d[3]};
}

int shape_extent(ShapeKind s) noexcept { return s == ShapeKind::Square ? kShapeExtent : kDiscExtent; }

bool shape_covers(ShapeKind s, int dy, int dx) noexcept {
  const int e = shape_extent(s);
  if (dy < 0 || dx < 0 || dy >= e || dx >= e) return false;
  if (s == ShapeKind::Square) return true;
  // Disc of diameter 7 centred in its box: radius 3.5 around (3, 3).
  const int cy = dy - 3, cx = dx - 3;
  return 4 * (cy * cy + cx * cx) <= 49;
}

ToyClip render_clip(const std::vector<ShapeTrack>& tracks, flow::ConditionId label, const ClipGeometry& geom) {
  ToyClip clip{Grid(geom.dims()), Grid(geom.token_dims()), label, tracks};
  const int H = static_cast<int>(geom.height), W = static_cast<int>(geom.width);
  for (const auto& tr : tracks) {
    const int e = shape_extent(tr.shape);
    for (std::size_t f = 0; f < geom.frames; ++f) {
      const int y = tr.y0 + tr.vy * static_cast<int>(f);
      const int x = tr.x0 + tr.vx * static_cast<int>(f);
      if (y < 0 || x < 0 || y + e > H || x + e > W) fail(ErrorKind::Domain, "shape leaves the frame");
      for (int dy = 0; dy < e; ++dy) {
        for (int dx = 0; dx < e; ++dx) {
          if (!shape_covers(tr.shape, dy, dx)) continue;
          const auto py = static_cast<std::size_t>(y + dy), px = static_cast<std::size_t>(x + dx);
          clip.support.at({f, py, px}) = 1.0;
          for (std::size_t c = 0; c < geom.channels; ++c) clip.video.at({f, py, px, c}) = 1.0;
        }
      }
    }
  }
  return clip;
}

namespace {

// Uniform start coordinate keeping [p, p + e) inside [0, n) for all frames.
int draw_start(RngStream& rng, int n, int e, int v, int frames) {
  const int travel = v * (frames - 1);
  const int lo = std::max(0, -travel);
  const int hi = std::min(n - e, n - e - travel);
  if (hi < lo) fail(ErrorKind::UnsupportedShape, "frame too small for a moving shape");
  return lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
}

ShapeTrack draw_track(RngStream& rng, ShapeKind shape, const ClipGeometry& geom) {
  ShapeTrack tr{shape};
  tr.vy = static_cast<int>(rng.below(3)) - 1;
  tr.vx = static_cast<int>(rng.below(3)) - 1;
  const int e = shape_extent(shape), F = static_cast<int>(geom.frames);
  tr.y0 = draw_start(rng, static_cast<int>(geom.height), e, tr.vy, F);
  tr.x0 = draw_start(rng, static_cast<int>(geom.width), e, tr.vx, F);
  return tr;
}

bool overlaps(const ToyClip& a, const ToyClip& b) {
  for (std::size_t i = 0; i < a.support.size(); ++i) {
    if (a.support[i] > 0.0 && b.support[i] > 0.0) return true;
  }
  return false;
}

}  // namespace

std::vector<ToyClip> make_toy_dataset(DatasetKind kind, std::size_t count, const RngStream& rng,
                                      const ClipGeometry& geom) {
  if (count == 0) fail(ErrorKind::Parameter, "dataset count must be at least 1");
  std::vector<ToyClip> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    RngStream r = rng.fork(i);
    switch (kind) {
      case DatasetKind::MovingSquare:
        out.push_back(render_clip({draw_track(r, ShapeKind::Square, geom)}, {kSquareLabel}, geom));
        break;
      case DatasetKind::MovingDisc:
        out.push_back(render_clip({draw_track(r, ShapeKind::Disc, geom)}, {kDiscLabel}, geom));
        break;
      case DatasetKind::TwoObject: {
        bool placed = false;
        for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
          const ShapeTrack sq = draw_track(r, ShapeKind::Square, geom);
          const ShapeTrack di = draw_track(r, ShapeKind::Disc, geom);
          const ToyClip a = render_clip({sq}, {kTwoObjectLabel}, geom);
          const ToyClip b = render_clip({di}, {kTwoObjectLabel}, geom);
          if (overlaps(a, b)) continue;
          out.push_back(render_clip({sq, di}, {kTwoObjectLabel}, geom));
          placed = true;
        }
        if (!placed) fail(ErrorKind::UnsupportedShape, "could not place two disjoint shapes");
        break;
      }
    }
  }
  return out;
}

namespace {

// Best squared error of one frame against a binary template over all
// in-frame placements. SSE = sum(f^2) - 2 sum_inside(f) + |shape|.
double best_placement(const Grid& video, std::size_t frame, ShapeKind shape) {
  const auto& d = video.dims();
  const std::size_t H = d[1], W = d[2], C = d[3];
  const int e = shape_extent(shape);
  double energy = 0.0;
  std::vector<double> plane(H * W, 0.0);
  for (std::size_t y = 0; y < H; ++y) {
    for (std::size_t x = 0; x < W; ++x) {
      for (std::size_t c = 0; c < C; ++c) {
        const double v = video.at({frame, y, x, c});
        plane[y * W + x] += v;
        energy += v * v;
      }
    }
  }
  double area = 0.0;
  for (int dy = 0; dy < e; ++dy)
    for (int dx = 0; dx < e; ++dx) area += shape_covers(shape, dy, dx) ? 1.0 : 0.0;
  area *= static_cast<double>(C);

  double best = std::numeric_limits<double>::infinity();
  for (int y0 = 0; y0 + e <= static_cast<int>(H); ++y0) {
    for (int x0 = 0; x0 + e <= static_cast<int>(W); ++x0) {
      double inside = 0.0;
      for (int dy = 0; dy < e; ++dy)
        for (int dx = 0; dx < e; ++dx)
          if (shape_covers(shape, dy, dx)) inside += plane[static_cast<std::size_t>(y0 + dy) * W + static_cast<std::size_t>(x0 + dx)];
      best = std::min(best, energy - 2.0 * inside + area);
    }
  }
  return best;
}

}  // namespace

TemplateMatch classify_clip(const Grid& video) {
  const ClipGeometry g = geometry_of(video);
  if (static_cast<int>(g.height) < kDiscExtent || static_cast<int>(g.width) < kDiscExtent) {
    fail(ErrorKind::UnsupportedShape, "frame smaller than the templates");
  }
  TemplateMatch m{ShapeKind::Square, 0.0, 0.0};
  for (std::size_t f = 0; f < g.frames; ++f) {
    m.square_sse += best_placement(video, f, ShapeKind::Square);
    m.disc_sse += best_placement(video, f, ShapeKind::Disc);
  }
  m.shape = m.disc_sse < m.square_sse ? ShapeKind::Disc : ShapeKind::Square;
  return m;
}

}  // namespace dfv::toy
