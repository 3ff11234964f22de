#include "dfv/toymodels/codec.hpp"

#include <string>

#include "dfv/numcore/error.hpp"

namespace dfv::toy {

std::string_view to_string(CodecKind k) noexcept {
  switch (k) {
    case CodecKind::Identity: return "identity";
    case CodecKind::AvgPool2: return "avgpool2";
    case CodecKind::SpaceToDepth2: return "s2d2";
  }
  return "?";
}

CodecKind parse_codec(std::string_view name) {
  if (name == "identity") return CodecKind::Identity;
  if (name == "avgpool2") return CodecKind::AvgPool2;
  if (name == "s2d2") return CodecKind::SpaceToDepth2;
  fail(ErrorKind::Kind, "unknown codec '" + std::string(name) + "'");
}

ClipGeometry latent_geometry(const ClipGeometry& g, CodecKind k) {
  if (k == CodecKind::Identity) return g;
  if (g.height % 2 != 0 || g.width % 2 != 0) fail(ErrorKind::UnsupportedShape, "2x2 codecs need even height and width");
  const std::size_t channels = k == CodecKind::SpaceToDepth2 ? 4 * g.channels : g.channels;
  return {g.frames, g.height / 2, g.width / 2, channels};
}

Grid encode(const Grid& video, CodecKind k) {
  const ClipGeometry g = geometry_of(video);
  if (k == CodecKind::Identity) return video;
  const ClipGeometry l = latent_geometry(g, k);
  Grid out(l.dims());
  if (k == CodecKind::SpaceToDepth2) {
    // Channel index (dy * 2 + dx) * C + c.
    for (std::size_t f = 0; f < l.frames; ++f)
      for (std::size_t y = 0; y < l.height; ++y)
        for (std::size_t x = 0; x < l.width; ++x)
          for (std::size_t q = 0; q < 4; ++q)
            for (std::size_t c = 0; c < g.channels; ++c)
              out.at({f, y, x, q * g.channels + c}) = video.at({f, 2 * y + q / 2, 2 * x + q % 2, c});
    return out;
  }
  for (std::size_t f = 0; f < l.frames; ++f)
    for (std::size_t y = 0; y < l.height; ++y)
      for (std::size_t x = 0; x < l.width; ++x)
        for (std::size_t c = 0; c < l.channels; ++c) {
          const double s = video.at({f, 2 * y, 2 * x, c}) + video.at({f, 2 * y, 2 * x + 1, c}) +
                           video.at({f, 2 * y + 1, 2 * x, c}) + video.at({f, 2 * y + 1, 2 * x + 1, c});
          out.at({f, y, x, c}) = 0.25 * s;
        }
  return out;
}

Grid decode(const Grid& latent, CodecKind k) {
  const ClipGeometry l = geometry_of(latent);
  if (k == CodecKind::Identity) return latent;
  if (k == CodecKind::SpaceToDepth2) {
    if (l.channels % 4 != 0) fail(ErrorKind::Shape, "s2d2 latents carry a multiple of four channels");
    const std::size_t C = l.channels / 4;
    Grid out({l.frames, 2 * l.height, 2 * l.width, C});
    for (std::size_t f = 0; f < l.frames; ++f)
      for (std::size_t y = 0; y < l.height; ++y)
        for (std::size_t x = 0; x < l.width; ++x)
          for (std::size_t q = 0; q < 4; ++q)
            for (std::size_t c = 0; c < C; ++c)
              out.at({f, 2 * y + q / 2, 2 * x + q % 2, c}) = latent.at({f, y, x, q * C + c});
    return out;
  }
  Grid out({l.frames, 2 * l.height, 2 * l.width, l.channels});
  for (std::size_t f = 0; f < l.frames; ++f)
    for (std::size_t y = 0; y < 2 * l.height; ++y)
      for (std::size_t x = 0; x < 2 * l.width; ++x)
        for (std::size_t c = 0; c < l.channels; ++c) out.at({f, y, x, c}) = latent.at({f, y / 2, x / 2, c});
  return out;
}

Grid decode_mask(const Grid& mask, CodecKind k) {
  if (mask.rank() != 3) fail(ErrorKind::Shape, "token masks are (F, H, W)");
  if (k == CodecKind::Identity) return mask;
  const auto& d = mask.dims();
  Grid out({d[0], 2 * d[1], 2 * d[2]});
  for (std::size_t f = 0; f < d[0]; ++f)
    for (std::size_t y = 0; y < 2 * d[1]; ++y)
      for (std::size_t x = 0; x < 2 * d[2]; ++x) out.at({f, y, x}) = mask.at({f, y / 2, x / 2});
  return out;
}

Grid encode_mask(const Grid& mask, CodecKind k) {
  if (mask.rank() != 3) fail(ErrorKind::Shape, "pixel masks are (F, H, W)");
  if (k == CodecKind::Identity) return mask;
  const auto& d = mask.dims();
  if (d[1] % 2 != 0 || d[2] % 2 != 0) fail(ErrorKind::UnsupportedShape, "2x2 codecs need even height and width");
  Grid out({d[0], d[1] / 2, d[2] / 2});
  for (std::size_t f = 0; f < d[0]; ++f)
    for (std::size_t y = 0; y < d[1]; ++y)
      for (std::size_t x = 0; x < d[2]; ++x) {
        if (mask.at({f, y, x}) != 0.0) out.at({f, y / 2, x / 2}) = 1.0;
      }
  return out;
}

}  // namespace dfv::toy
