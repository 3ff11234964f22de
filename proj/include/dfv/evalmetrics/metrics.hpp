#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "dfv/numcore/grid.hpp"

namespace dfv::metrics {

inline constexpr double kPsnrCap = 99.0;
inline constexpr double kMaskThreshold = 0.3;

/// 10 log10(1 / mse) over every value, for videos in [0, 1]; 99 when equal.
double psnr(const Grid& source, const Grid& edited);

/// PSNR of edited against source restricted to the pixels the edit mask
/// leaves alone: mask values >= 0.3 count as edited, the rest form M*. The
/// mask is (F, H, W) for (F, H, W, C) videos, or the video dims. Pools all
/// pixels of all frames. Throws UndefinedRegion when M* is empty.
double masked_psnr(const Grid& source, const Grid& edited, const Grid& edit_mask);

struct Consistency {
  double value = 0.0;
  std::vector<std::size_t> skipped_frames;  // zero-norm frames left out
};

/// Mean cosine similarity of adjacent frames. Pairs touching a zero-norm
/// frame are skipped. Throws InsufficientFrames for F < 2 or when no pair
/// remains.
Consistency frame_consistency(const Grid& video);

struct MetricsRow {
  std::string clip_id;
  double psnr = 0.0;
  double masked_psnr = 0.0;
  double frame_consistency = 0.0;
};

/// CSV: clip_id,psnr,masked_psnr,frame_consistency
void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows);

}  // namespace dfv::metrics
