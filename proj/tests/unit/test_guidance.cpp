#include "doctest.h"
#include "dfv/guidance/guidance.hpp"
#include "dfv/numcore/error.hpp"
#include "dfv/numcore/rng.hpp"

using namespace dfv;
using namespace dfv::guide;
using toy::AttentionSnapshot;
using toy::Matrix;

namespace {

// N = 2 text tokens, M = 3 latent tokens laid out as (1, 1, 3).
Matrix hand_matrix() {
  Matrix a(5, 5);
  a << 0.40, 0.10, 0.20, 0.20, 0.10,
       0.05, 0.55, 0.10, 0.10, 0.20,
       0.30, 0.25, 0.15, 0.20, 0.10,
       0.05, 0.60, 0.05, 0.20, 0.10,
       0.125, 0.125, 0.25, 0.25, 0.25;
  return a;
}

GuidanceMask grid_mask(std::initializer_list<double> v, MaskSource s = MaskSource::Ica) {
  return make_mask(Grid({1, 1, v.size()}, std::vector<double>(v)), s);
}

}  // namespace

TEST_CASE("extract_ica reads column k of the latent-to-text block") {
  const AttentionSnapshot snap(1, 0.5, 2, {1, 1, 3}, hand_matrix());
  const Grid k0 = extract_ica(snap, 0);
  const Grid k1 = extract_ica(snap, 1);
  CHECK(k0.dims() == Extents{1, 1, 3});
  CHECK(k0[0] == 0.30);
  CHECK(k0[1] == 0.05);
  CHECK(k0[2] == 0.125);
  CHECK(k1[0] == 0.25);
  CHECK(k1[1] == 0.60);
  CHECK(k1[2] == 0.125);
  CHECK_THROWS_AS(extract_ica(snap, 2), Error);

  const Matrix uniform = Matrix::Constant(5, 5, 0.2);
  const Grid flat = extract_ica(AttentionSnapshot(0, 1.0, 2, {1, 1, 3}, uniform), 1);
  for (double v : flat.values()) CHECK(v == 0.2);
}

TEST_CASE("snapshots reject non-stochastic matrices and mismatched geometry") {
  Matrix bad = hand_matrix();
  bad(0, 0) += 0.01;
  CHECK_THROWS_AS(AttentionSnapshot(0, 0.0, 2, {1, 1, 3}, bad), Error);
  CHECK_THROWS_AS(AttentionSnapshot(0, 0.0, 2, {1, 2, 3}, hand_matrix()), Error);
}

TEST_CASE("binarize examples") {
  const GuidanceMask all = binarize_mask(Grid({2, 2, 2}, 0.3), {ThresholdPolicy::Quantile, 0.5, 1.0, 0});
  for (double v : all.grid.values()) CHECK(v == 1.0);

  Grid hot({3, 5, 5});
  hot.at({1, 2, 2}) = 1.0;
  const GuidanceMask m = binarize_mask(hot, {ThresholdPolicy::Quantile, 0.9, 1.0, 1});
  double ones = 0.0;
  for (double v : m.grid.values()) ones += v;
  CHECK(ones == 7.0);
  for (auto idx : {std::array<std::size_t, 3>{1, 2, 2}, {0, 2, 2}, {2, 2, 2}, {1, 1, 2}, {1, 3, 2}, {1, 2, 1}, {1, 2, 3}}) {
    CHECK(m.grid.at({idx[0], idx[1], idx[2]}) == 1.0);
  }

  CHECK_THROWS_AS(binarize_mask(hot, {ThresholdPolicy::Quantile, 1.0, 1.0, 0}), Error);
  CHECK_THROWS_AS(binarize_mask(hot, {ThresholdPolicy::Quantile, 0.0, 1.0, 0}), Error);
}

TEST_CASE("binarize without dilation is idempotent") {
  RngStream rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    Grid raw = rng.gaussian({2, 4, 4});
    for (double& v : raw.values()) v = v * v;
    const double q = 0.05 + 0.9 * rng.uniform(1)[0];
    const BinarizePolicy p{ThresholdPolicy::Quantile, q, 1.0, 0};
    const GuidanceMask once = binarize_mask(raw, p);
    const GuidanceMask twice = binarize_mask(once.grid, p);
    CHECK(bit_equal(once.grid, twice.grid));
  }
}

TEST_CASE("mean-plus-k-std policy") {
  const Grid raw({1, 1, 4}, std::vector<double>{0, 0, 0, 4});
  // mean 1, std sqrt(3): threshold 1 + sqrt(3) keeps only the 4.
  const GuidanceMask m = binarize_mask(raw, {ThresholdPolicy::MeanPlusKStd, 0.5, 1.0, 0});
  CHECK(m.grid == Grid({1, 1, 4}, std::vector<double>{0, 0, 0, 1}));
}

TEST_CASE("combine_masks lattice laws") {
  const GuidanceMask a = grid_mask({1, 0, 1, 0});
  const GuidanceMask b = grid_mask({0, 0, 1, 1});
  const GuidanceMask zero = grid_mask({0, 0, 0, 0});
  const GuidanceMask one = grid_mask({1, 1, 1, 1});
  CHECK(bit_equal(combine_masks(a, zero, MaskOp::Union).grid, a.grid));
  CHECK(bit_equal(combine_masks(a, one, MaskOp::Intersection).grid, a.grid));
  const GuidanceMask u = combine_masks(a, b, MaskOp::Union);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(u.grid[i] >= a.grid[i]);
    CHECK(u.grid[i] >= b.grid[i]);
  }
  CHECK(u.provenance == MaskSource::Union);
  // Absorption: a | (a & b) == a and a & (a | b) == a.
  CHECK(bit_equal(combine_masks(a, combine_masks(a, b, MaskOp::Intersection), MaskOp::Union).grid, a.grid));
  CHECK(bit_equal(combine_masks(a, u, MaskOp::Intersection).grid, a.grid));
  CHECK(bit_equal(combine_masks(a, b, MaskOp::AOnly).grid, a.grid));
  CHECK_THROWS_AS(combine_masks(a, grid_mask({1, 0}), MaskOp::Union), Error);
  CHECK_THROWS_AS(make_mask(Grid({2}, 0.5), MaskSource::External), Error);
}

TEST_CASE("mask_schedule intervals") {
  const GuidanceMask ica = grid_mask({1, 1, 0, 0});
  const GuidanceMask ext = grid_mask({0, 1, 1, 0}, MaskSource::External);
  CHECK(bit_equal(mask_schedule(1.0, 1.0, ica, &ext).grid, ica.grid));
  CHECK(bit_equal(mask_schedule(0.4, 1.0, ica, &ext).grid, ica.grid));
  CHECK(bit_equal(mask_schedule(0.0, 1.0, ica, &ext).grid, ext.grid));
  CHECK(bit_equal(mask_schedule(0.3, 1.0, ica, &ext).grid, ext.grid));
  const GuidanceMask gap = mask_schedule(0.35, 1.0, ica, &ext);
  CHECK(gap.grid == Grid({1, 1, 4}, std::vector<double>{1, 1, 1, 0}));
  CHECK(gap.provenance == MaskSource::Union);
  CHECK(bit_equal(mask_schedule(0.1, 1.0, ica, nullptr).grid, ica.grid));
  CHECK_THROWS_AS(mask_schedule(1.5, 1.0, ica, &ext), Error);
}

TEST_CASE("embedding reinforcement") {
  const Grid e({2, 2}, std::vector<double>{1, 1, 2, 2});
  CHECK(bit_equal(embedding_reinforce(e, {0.0, {0, 1}}), e));
  CHECK(embedding_reinforce(e, {5.0, {1}}) == Grid({2, 2}, std::vector<double>{1, 1, 12, 12}));

  const Grid r = RngStream(4).gaussian_at(0, {3, 8});
  const Grid out = embedding_reinforce(r, {0.7, {2}});
  for (std::size_t j = 0; j < 16; ++j) CHECK(out[j] == r[j]);
  for (std::size_t j = 16; j < 24; ++j) CHECK(out[j] == 1.7 * r[j]);
  CHECK_THROWS_AS(embedding_reinforce(r, {0.2, {3}}), Error);
  CHECK_THROWS_AS(embedding_reinforce(r, {-0.1, {0}}), Error);
}
