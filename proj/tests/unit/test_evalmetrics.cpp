#include <cmath>
#include <sstream>

#include "doctest.h"
#include "dfv/evalmetrics/metrics.hpp"
#include "dfv/numcore/error.hpp"
#include "dfv/numcore/rng.hpp"
#include "dfv/toymodels/dataset.hpp"

using namespace dfv;
using namespace dfv::metrics;

namespace {

Grid offset(const Grid& g, double d) {
  Grid out = g;
  for (double& v : out.values()) v += d;
  return out;
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected dfv::Error");
  return ErrorKind::Io;
}

}  // namespace

TEST_CASE("psnr examples") {
  const Grid v({2, 4, 4, 1}, 0.25);
  CHECK(psnr(v, v) == kPsnrCap);
  CHECK(psnr(v, offset(v, 0.1)) == doctest::Approx(20.0).epsilon(1e-9));
  CHECK(psnr(v, offset(v, 0.5)) == doctest::Approx(20.0 * std::log10(2.0)).epsilon(1e-12));
  CHECK(psnr(v, offset(v, 0.5)) == doctest::Approx(6.0206).epsilon(1e-4));
  CHECK(kind_of([&] { psnr(v, Grid({2, 4, 4, 2})); }) == ErrorKind::Shape);
}

TEST_CASE("psnr is invariant to pixel permutations") {
  RngStream r(3);
  const Grid a = r.gaussian({64});
  const Grid b = r.gaussian({64});
  Grid pa({64}), pb({64});
  for (std::size_t i = 0; i < 64; ++i) {
    pa[i] = a[(i * 13) % 64];
    pb[i] = b[(i * 13) % 64];
  }
  CHECK(psnr(a, b) == doctest::Approx(psnr(pa, pb)).epsilon(1e-14));
}

TEST_CASE("masked_psnr examples") {
  const Grid v({2, 4, 4, 1}, 0.5);
  const Grid none({2, 4, 4});
  CHECK(masked_psnr(v, v, none) == kPsnrCap);
  // An all-pass complement gives plain PSNR.
  const Grid w = RngStream(1).gaussian_at(0, {2, 4, 4, 1});
  CHECK(masked_psnr(v, w, none) == psnr(v, w));

  // Edit the left half; offset 0.1 on the right half only shows up outside.
  Grid mask({2, 4, 4});
  Grid edited = v;
  for (std::size_t f = 0; f < 2; ++f)
    for (std::size_t y = 0; y < 4; ++y)
      for (std::size_t x = 0; x < 4; ++x) {
        if (x < 2) {
          mask.at({f, y, x}) = 1.0;
          edited.at({f, y, x, 0}) = 0.9;
        } else {
          edited.at({f, y, x, 0}) += 0.1;
        }
      }
  CHECK(masked_psnr(v, edited, mask) == doctest::Approx(20.0).epsilon(1e-9));

  // Soft masks binarize at 0.3.
  Grid soft = mask;
  for (double& m : soft.values()) m = m > 0.0 ? 0.3 : 0.29;
  CHECK(masked_psnr(v, edited, soft) == doctest::Approx(20.0).epsilon(1e-9));

  CHECK(kind_of([&] { masked_psnr(v, edited, Grid({2, 4, 4}, 1.0)); }) == ErrorKind::UndefinedRegion);
  CHECK(kind_of([&] { masked_psnr(v, edited, Grid({2, 4, 3})); }) == ErrorKind::Shape);
}

TEST_CASE("frame consistency examples") {
  const Grid frame = RngStream(2).gaussian_at(0, {1, 3, 3, 1});
  Grid stat({4, 3, 3, 1});
  Grid alt({4, 3, 3, 1});
  for (std::size_t f = 0; f < 4; ++f)
    for (std::size_t j = 0; j < 9; ++j) {
      stat[f * 9 + j] = frame[j];
      alt[f * 9 + j] = (f % 2 ? -1.0 : 1.0) * frame[j];
    }
  CHECK(frame_consistency(stat).value == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(frame_consistency(alt).value == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(kind_of([&] { frame_consistency(Grid({1, 3, 3, 1}, 1.0)); }) == ErrorKind::InsufficientFrames);

  Grid holes = stat;
  for (std::size_t j = 0; j < 9; ++j) holes[9 + j] = 0.0;
  const Consistency c = frame_consistency(holes);
  CHECK(c.skipped_frames == std::vector<std::size_t>{1});
  CHECK(c.value == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("frame consistency falls as motion grows") {
  double prev = 2.0;
  for (int shift = 1; shift <= 4; ++shift) {
    const toy::ShapeTrack track{toy::ShapeKind::Square, 1, 1, 0, shift};
    const toy::ToyClip clip = toy::render_clip({track}, flow::ConditionId{toy::kSquareLabel}, {3, 16, 16, 1});
    const double c = frame_consistency(clip.video).value;
    if (shift == 1) CHECK(c > 0.8);
    CHECK(c < prev);
    prev = c;
  }
}

TEST_CASE("metrics csv") {
  std::ostringstream out;
  write_metrics_csv(out, {{"clip0", 99.0, 99.0, 0.5}});
  CHECK(out.str() == "clip_id,psnr,masked_psnr,frame_consistency\nclip0,99.000000,99.000000,0.500000\n");
}
