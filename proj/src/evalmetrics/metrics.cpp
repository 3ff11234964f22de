#include "dfv/evalmetrics/metrics.hpp"

#include <cmath>
#include <ostream>

#include <fmt/format.h>

#include "dfv/numcore/error.hpp"

namespace dfv::metrics {

namespace {

void check_pair(const Grid& a, const Grid& b) {
  if (!a.same_shape(b)) fail(ErrorKind::Shape, "source and edited videos differ in dims");
  if (a.empty()) fail(ErrorKind::InvalidDimension, "empty video");
  if (!all_finite(a) || !all_finite(b)) fail(ErrorKind::Domain, "videos must be finite");
}

double from_mse(double sse, double count) {
  if (sse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(count / sse));
}

}  // namespace

double psnr(const Grid& source, const Grid& edited) {
  check_pair(source, edited);
  double sse = 0.0;
  for (std::size_t i = 0; i < source.size(); ++i) {
    const double d = edited[i] - source[i];
    sse += d * d;
  }
  return from_mse(sse, double(source.size()));
}

double masked_psnr(const Grid& source, const Grid& edited, const Grid& edit_mask) {
  check_pair(source, edited);
  std::size_t stride = 1;
  if (edit_mask.dims() != source.dims()) {
    const auto& d = source.dims();
    if (d.size() < 2 || Extents(d.begin(), d.end() - 1) != edit_mask.dims()) {
      fail(ErrorKind::Shape, "mask dims match neither the video nor its (F, H, W) grid");
    }
    stride = d.back();
  }
  double sse = 0.0, count = 0.0;
  for (std::size_t i = 0; i < source.size(); ++i) {
    if (edit_mask[i / stride] >= kMaskThreshold) continue;
    const double d = edited[i] - source[i];
    sse += d * d;
    count += 1.0;
  }
  if (count == 0.0) fail(ErrorKind::UndefinedRegion, "the edit mask covers every pixel; M.PSNR is undefined");
  return from_mse(sse, count);
}

Consistency frame_consistency(const Grid& video) {
  if (video.rank() < 2) fail(ErrorKind::Shape, "video needs a leading frame axis");
  const std::size_t F = video.dims()[0];
  if (F < 2) fail(ErrorKind::InsufficientFrames, "frame consistency needs at least two frames");
  const std::size_t n = video.size() / F;
  std::vector<double> norms(F, 0.0);
  for (std::size_t f = 0; f < F; ++f) {
    for (std::size_t j = 0; j < n; ++j) norms[f] += video[f * n + j] * video[f * n + j];
    norms[f] = std::sqrt(norms[f]);
  }
  Consistency out;
  for (std::size_t f = 0; f < F; ++f) {
    if (norms[f] == 0.0) out.skipped_frames.push_back(f);
  }
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t f = 0; f + 1 < F; ++f) {
    if (norms[f] == 0.0 || norms[f + 1] == 0.0) continue;
    double dot = 0.0;
    for (std::size_t j = 0; j < n; ++j) dot += video[f * n + j] * video[(f + 1) * n + j];
    sum += dot / (norms[f] * norms[f + 1]);
    ++pairs;
  }
  if (pairs == 0) fail(ErrorKind::InsufficientFrames, "no adjacent pair of non-zero frames");
  out.value = sum / double(pairs);
  return out;
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows) {
  out << "clip_id,psnr,masked_psnr,frame_consistency\n";
  for (const auto& r : rows) {
    out << fmt::format("{},{:.6f},{:.6f},{:.6f}\n", r.clip_id, r.psnr, r.masked_psnr, r.frame_consistency);
  }
}

}  // namespace dfv::metrics
