#include "doctest.h"
#include "dfv/numcore/error.hpp"
#include "dfv/numcore/rng.hpp"
#include "dfv/toymodels/codec.hpp"

using namespace dfv;
using namespace dfv::toy;

TEST_CASE("identity codec is a no-op") {
  const Grid v = RngStream(1).gaussian_at(0, {2, 4, 4, 1});
  CHECK(bit_equal(encode(v, CodecKind::Identity), v));
  CHECK(bit_equal(decode(v, CodecKind::Identity), v));
}

TEST_CASE("avgpool2 averages cells and repeats on decode") {
  Grid v({1, 2, 2, 1}, std::vector<double>{1, 2, 3, 6});
  const Grid z = encode(v, CodecKind::AvgPool2);
  CHECK(z.dims() == Extents{1, 1, 1, 1});
  CHECK(z[0] == 3.0);
  const Grid back = decode(z, CodecKind::AvgPool2);
  for (double x : back.values()) CHECK(x == 3.0);
  CHECK_THROWS_AS(encode(Grid({1, 3, 2, 1}), CodecKind::AvgPool2), Error);
}

TEST_CASE("s2d2 is lossless and folds cells into channels") {
  const Grid v = RngStream(2).gaussian_at(0, {3, 6, 4, 2});
  const Grid z = encode(v, CodecKind::SpaceToDepth2);
  CHECK(z.dims() == Extents{3, 3, 2, 8});
  CHECK(bit_equal(decode(z, CodecKind::SpaceToDepth2), v));
  // Channel (dy * 2 + dx) * C + c of cell (f, y, x).
  CHECK(z.at({1, 2, 1, 7}) == v.at({1, 5, 3, 1}));
  CHECK(z.at({0, 0, 0, 2}) == v.at({0, 0, 1, 0}));

  Grid m({1, 1, 2});
  m[1] = 1.0;
  const Grid pix = decode_mask(m, CodecKind::SpaceToDepth2);
  CHECK(pix == Grid({1, 2, 4}, std::vector<double>{0, 0, 1, 1, 0, 0, 1, 1}));
  const Grid px({1, 2, 4}, std::vector<double>{0, 0, 0, 0, 0, 0, 0, 1});
  CHECK(encode_mask(px, CodecKind::SpaceToDepth2) == m);
  CHECK(bit_equal(encode_mask(px, CodecKind::Identity), px));
  CHECK(parse_codec("s2d2") == CodecKind::SpaceToDepth2);
  CHECK(to_string(CodecKind::SpaceToDepth2) == "s2d2");
  CHECK_THROWS_AS(parse_codec("vae"), Error);
}
