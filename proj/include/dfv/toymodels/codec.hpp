#pragma once

#include <string_view>

#include "dfv/numcore/grid.hpp"
#include "dfv/toymodels/dataset.hpp"

namespace dfv::toy {

/// Pixel <-> latent maps. Identity is the default; AvgPool2 averages 2x2
/// spatial cells and decodes by nearest-neighbour repetition, so the
/// encode and decode steps of the editing pipeline have something to do.
/// SpaceToDepth2 folds each 2x2 cell into four channels: lossless, and a
/// quarter of the tokens, which is what makes toy training affordable.
enum class CodecKind { Identity, AvgPool2, SpaceToDepth2 };

std::string_view to_string(CodecKind k) noexcept;
CodecKind parse_codec(std::string_view name);

ClipGeometry latent_geometry(const ClipGeometry& pixels, CodecKind k);
Grid encode(const Grid& video, CodecKind k);
Grid decode(const Grid& latent, CodecKind k);

/// Token mask (F, h, w) in latent space to pixel space (F, H, W).
Grid decode_mask(const Grid& mask, CodecKind k);

/// Pixel mask (F, H, W) to latent tokens: a token is set when any pixel of
/// its cell is, so decode_mask(encode_mask(m)) covers m.
Grid encode_mask(const Grid& mask, CodecKind k);

}  // namespace dfv::toy
