#include "dfv/guidance/guidance.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dfv/numcore/error.hpp"

namespace dfv::guide {

std::string_view to_string(MaskSource s) noexcept {
  switch (s) {
    case MaskSource::Ica: return "ica";
    case MaskSource::External: return "external";
    case MaskSource::Union: return "union";
    case MaskSource::Intersection: return "intersection";
  }
  return "?";
}

GuidanceMask make_mask(Grid grid, MaskSource provenance, double t_lo, double t_hi) {
  for (double v : grid.values()) {
    if (v != 0.0 && v != 1.0) fail(ErrorKind::Domain, "mask values must be exactly 0 or 1");
  }
  return {std::move(grid), provenance, t_lo, t_hi};
}

Grid extract_ica(const toy::AttentionSnapshot& snap, std::size_t k) {
  if (k >= snap.text_tokens()) {
    fail(ErrorKind::Index, "text token " + std::to_string(k) + " out of range (N = " +
                               std::to_string(snap.text_tokens()) + ")");
  }
  const auto n = static_cast<Eigen::Index>(snap.text_tokens());
  const auto col = snap.full().col(static_cast<Eigen::Index>(k));
  Grid out(snap.token_dims());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = col(n + static_cast<Eigen::Index>(i));
  return out;
}

namespace {

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * double(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - double(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

}  // namespace

GuidanceMask binarize_mask(const Grid& raw, const BinarizePolicy& policy) {
  if (raw.empty()) fail(ErrorKind::InvalidDimension, "empty relevance grid");
  if (policy.dilation < 0) fail(ErrorKind::Parameter, "dilation radius must be >= 0");
  const auto vals = raw.values();
  const auto [mn_it, mx_it] = std::minmax_element(vals.begin(), vals.end());
  const double mn = *mn_it, mx = *mx_it;
  if (mn < 0.0) fail(ErrorKind::Domain, "relevance must be non-negative");

  double threshold = 0.0;
  bool strict = false;
  if (policy.kind == ThresholdPolicy::Quantile) {
    if (!(policy.q > 0.0 && policy.q < 1.0)) fail(ErrorKind::Parameter, "quantile must lie in (0, 1)");
    threshold = quantile({vals.begin(), vals.end()}, policy.q);
    strict = threshold == mn && mx > mn;
  } else {
    double mean = 0.0;
    for (double v : vals) mean += v;
    mean /= double(vals.size());
    double var = 0.0;
    for (double v : vals) var += (v - mean) * (v - mean);
    threshold = mean + policy.k * std::sqrt(var / double(vals.size()));
  }
  Grid mask = Grid::like(raw);
  for (std::size_t i = 0; i < vals.size(); ++i) {
    mask[i] = (strict ? vals[i] > threshold : vals[i] >= threshold) ? 1.0 : 0.0;
  }
  return {dilate(mask, policy.dilation), MaskSource::Ica, 0.0, 0.0};
}

Grid dilate(const Grid& mask, int radius) {
  if (radius < 0) fail(ErrorKind::Parameter, "dilation radius must be >= 0");
  if (mask.rank() < 3) fail(ErrorKind::Shape, "dilation needs a grid of rank >= 3");
  const auto& d = mask.dims();
  const std::size_t r = d.size();
  const std::size_t F = d[r - 3], H = d[r - 2], W = d[r - 1];
  const std::size_t lead = mask.size() / (F * H * W);
  Grid cur = mask;
  for (int step = 0; step < radius; ++step) {
    Grid next = cur;
    for (std::size_t b = 0; b < lead; ++b) {
      const std::size_t base = b * F * H * W;
      for (std::size_t f = 0; f < F; ++f) {
        for (std::size_t y = 0; y < H; ++y) {
          for (std::size_t x = 0; x < W; ++x) {
            const std::size_t i = base + (f * H + y) * W + x;
            if (cur[i] == 0.0) continue;
            if (f > 0) next[i - H * W] = 1.0;
            if (f + 1 < F) next[i + H * W] = 1.0;
            if (y > 0) next[i - W] = 1.0;
            if (y + 1 < H) next[i + W] = 1.0;
            if (x > 0) next[i - 1] = 1.0;
            if (x + 1 < W) next[i + 1] = 1.0;
          }
        }
      }
    }
    cur = std::move(next);
  }
  return cur;
}

GuidanceMask combine_masks(const GuidanceMask& a, const GuidanceMask& b, MaskOp op) {
  if (!a.grid.same_shape(b.grid)) fail(ErrorKind::Shape, "combine_masks: dims differ");
  if (op == MaskOp::AOnly) return a;
  GuidanceMask out{Grid::like(a.grid), op == MaskOp::Union ? MaskSource::Union : MaskSource::Intersection,
                   std::min(a.t_lo, b.t_lo), std::max(a.t_hi, b.t_hi)};
  for (std::size_t i = 0; i < out.grid.size(); ++i) {
    const bool x = a.grid[i] != 0.0, y = b.grid[i] != 0.0;
    out.grid[i] = (op == MaskOp::Union ? (x || y) : (x && y)) ? 1.0 : 0.0;
  }
  return out;
}

GuidanceMask mask_schedule(double t, double horizon, const GuidanceMask& ica, const GuidanceMask* external) {
  if (!(t >= 0.0 && t <= horizon)) fail(ErrorKind::Domain, "mask_schedule: t outside [0, T]");
  if (external && !external->grid.same_shape(ica.grid)) fail(ErrorKind::Shape, "external mask dims differ from ICA");
  if (t >= 0.4 * horizon || external == nullptr) {
    GuidanceMask m = ica;
    m.t_lo = t >= 0.4 * horizon ? 0.4 * horizon : 0.0;
    m.t_hi = horizon;
    return m;
  }
  if (t <= 0.3 * horizon) {
    GuidanceMask m = *external;
    m.t_lo = 0.0;
    m.t_hi = 0.3 * horizon;
    return m;
  }
  GuidanceMask m = combine_masks(ica, *external, MaskOp::Union);
  m.t_lo = 0.3 * horizon;
  m.t_hi = 0.4 * horizon;
  return m;
}

Grid embedding_reinforce(const Grid& rows, const ERSpec& spec) {
  if (rows.rank() != 2) fail(ErrorKind::Shape, "embedding rows must be a (N, d) grid");
  if (!(spec.gamma >= 0.0) || !std::isfinite(spec.gamma)) fail(ErrorKind::Parameter, "gamma must be finite and >= 0");
  const std::size_t n = rows.dims()[0], d = rows.dims()[1];
  Grid out = rows;
  const double factor = 1.0 + spec.gamma;
  for (std::size_t k : spec.tokens) {
    if (k >= n) fail(ErrorKind::Index, "ER token " + std::to_string(k) + " out of range");
  }
  // A token listed twice is still scaled once.
  std::vector<bool> done(n, false);
  for (std::size_t k : spec.tokens) {
    if (done[k]) continue;
    done[k] = true;
    for (std::size_t j = 0; j < d; ++j) out[k * d + j] = factor * rows[k * d + j];
  }
  return out;
}

double mask_fraction(const Grid& mask) {
  if (mask.empty()) return 0.0;
  double ones = 0.0;
  for (double v : mask.values()) ones += v != 0.0 ? 1.0 : 0.0;
  return ones / double(mask.size());
}

}  // namespace dfv::guide
