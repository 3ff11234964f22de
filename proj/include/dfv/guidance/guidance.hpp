#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "dfv/numcore/grid.hpp"
#include "dfv/toymodels/attention.hpp"

namespace dfv::guide {

enum class MaskSource { Ica, External, Union, Intersection };
std::string_view to_string(MaskSource s) noexcept;

/// Binary mask over the latent token grid (F, H, W).
struct GuidanceMask {
  Grid grid;
  MaskSource provenance = MaskSource::Ica;
  double t_lo = 0.0;
  double t_hi = 0.0;
};

/// Wraps a 0/1 grid; throws Domain for any other value.
GuidanceMask make_mask(Grid grid, MaskSource provenance, double t_lo = 0.0, double t_hi = 0.0);

/// Relevance of text token k for every latent token: column k of the
/// latent-to-text block A_BE, reshaped to the token grid. A pure slice.
Grid extract_ica(const toy::AttentionSnapshot& snap, std::size_t k);

enum class ThresholdPolicy { Quantile, MeanPlusKStd };

struct BinarizePolicy {
  ThresholdPolicy kind = ThresholdPolicy::Quantile;
  double q = 0.85;  // quantile policy
  double k = 1.0;   // mean-plus-k-std policy
  int dilation = 1; // radius in token steps, 6-neighbourhood per step
};

/// Thresholds `raw` and dilates. For the quantile policy the threshold is
/// the linearly interpolated q-quantile and values >= it are kept, except
/// that a threshold equal to the minimum of a non-constant grid keeps only
/// values strictly above it (otherwise a mostly-zero map would select
/// everything).
GuidanceMask binarize_mask(const Grid& raw, const BinarizePolicy& policy);

/// Grows the set of ones by `radius` steps of the face-adjacent
/// neighbourhood of the last three axes.
Grid dilate(const Grid& mask, int radius);

enum class MaskOp { Union, Intersection, AOnly };

GuidanceMask combine_masks(const GuidanceMask& a, const GuidanceMask& b, MaskOp op);

/// ICA on [0.4T, T], the external mask (or ICA when absent) on [0, 0.3T],
/// and the union of both in between.
GuidanceMask mask_schedule(double t, double horizon, const GuidanceMask& ica, const GuidanceMask* external);

/// Embedding reinforcement: rows in `tokens` scaled by (1 + gamma).
struct ERSpec {
  double gamma = 0.2;
  std::vector<std::size_t> tokens;
};

Grid embedding_reinforce(const Grid& rows, const ERSpec& spec);

/// Fraction of ones.
double mask_fraction(const Grid& mask);

}  // namespace dfv::guide
