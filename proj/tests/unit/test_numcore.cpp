#include <sstream>

#include "doctest.h"
#include "dfv/numcore/dfvt.hpp"
#include "dfv/numcore/error.hpp"
#include "dfv/numcore/grid.hpp"
#include "dfv/numcore/rng.hpp"

using namespace dfv;

namespace {

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

TEST_CASE("philox4x32-10 matches the Random123 known-answer vectors") {
  using W = std::array<std::uint32_t, 4>;
  CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == W{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
        W{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
        W{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("gaussian_draw is deterministic per (seed, stream, call)") {
  RngStream a(7);
  const Grid first = gaussian_draw(a, {2, 2});
  const Grid second = gaussian_draw(a, {2, 2});
  CHECK_FALSE(first == second);

  RngStream replay(7);
  CHECK(bit_equal(gaussian_draw(replay, {2, 2}), first));
  CHECK(bit_equal(gaussian_draw(replay, {2, 2}), second));
  CHECK(bit_equal(a.gaussian_at(0, {2, 2}), first));

  // A longer draw extends a shorter one: element i depends only on its index.
  const Grid longer = RngStream(7).gaussian_at(0, {5});
  for (std::size_t i = 0; i < 4; ++i) CHECK(longer[i] == first[i]);
}

TEST_CASE("distinct stream ids give distinct sequences") {
  const Grid s0 = RngStream(11, 0).gaussian_at(0, {64});
  const Grid s1 = RngStream(11, 1).gaussian_at(0, {64});
  CHECK_FALSE(s0 == s1);
  CHECK(bit_equal(RngStream(11).fork(1).gaussian_at(0, {64}), s1));
}

TEST_CASE("standard-normal moments over 1e5 single draws") {
  RngStream rng(2024);
  double sum = 0.0, sum_sq = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double v = gaussian_draw(rng, {1})[0];
    sum += v;
    sum_sq += v * v;
  }
  const double mean = sum / n;
  CHECK(std::abs(mean) < 0.02);
  CHECK(std::abs(sum_sq / n - mean * mean - 1.0) < 0.02);
}

TEST_CASE("uniform draws lie in [0, 1) and below() respects its bound") {
  RngStream rng(3);
  for (double u : rng.uniform(1000)) {
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  for (int i = 0; i < 1000; ++i) CHECK(rng.below(7) < 7u);
}

TEST_CASE("zero or missing extents are rejected") {
  RngStream rng(1);
  CHECK(kind_of([&] { gaussian_draw(rng, {0}); }) == ErrorKind::InvalidDimension);
  CHECK(kind_of([&] { gaussian_draw(rng, {}); }) == ErrorKind::InvalidDimension);
  CHECK(kind_of([&] { Grid({3, 0, 2}); }) == ErrorKind::InvalidDimension);
  CHECK(kind_of([&] { Grid({2}, std::vector<double>{1, 2, 3}); }) == ErrorKind::Shape);
}

TEST_CASE("elementwise examples") {
  const Grid a = RngStream(5).gaussian_at(0, {3, 4});
  const Grid b = RngStream(5).gaussian_at(1, {3, 4});

  const Grid zero = elementwise(a, a, ElementOp::Sub, 1.0);
  CHECK(reduce_norm(zero, NormKind::MaxAbs) == 0.0);
  CHECK(bit_equal(elementwise(a, b, ElementOp::Add, 0.0), a));

  const Grid x({2}, std::vector<double>{1, 2});
  const Grid y({2}, std::vector<double>{0.5, 1});
  CHECK(elementwise(x, y, ElementOp::Sub, 2.0) == Grid({2}, std::vector<double>{0, 0}));
  CHECK(elementwise(x, y, ElementOp::Mul, 2.0) == Grid({2}, std::vector<double>{1, 4}));

  CHECK(kind_of([&] { elementwise(a, Grid({4, 3}), ElementOp::Add); }) == ErrorKind::Shape);
}

TEST_CASE("reduce_norm examples") {
  CHECK(reduce_norm(Grid({4, 4}), NormKind::L2) == 0.0);
  CHECK(reduce_norm(Grid({2}, std::vector<double>{3, 4}), NormKind::L2) == doctest::Approx(5.0));
  CHECK(reduce_norm(Grid({2}, std::vector<double>{-2, 1}), NormKind::MaxAbs) == 2.0);
  CHECK(reduce_norm(Grid({2}, std::vector<double>{-2, 1}), NormKind::Mean) == -0.5);
  CHECK(kind_of([] { reduce_norm(Grid(), NormKind::L2); }) == ErrorKind::InvalidDimension);
}

TEST_CASE("non-finite results are refused") {
  const Grid big({1}, std::vector<double>{1e308});
  CHECK(kind_of([&] { elementwise(big, big, ElementOp::Add, 10.0); }) == ErrorKind::Domain);
}

TEST_CASE("multi-index access is row-major") {
  Grid g({2, 3, 4});
  g.at({1, 2, 3}) = 9.0;
  CHECK(g[1 * 12 + 2 * 4 + 3] == 9.0);
  CHECK(kind_of([&] { g.at({2, 0, 0}); }) == ErrorKind::Index);
  CHECK(kind_of([&] { g.at({0, 0}); }) == ErrorKind::Index);
}

TEST_CASE("DFVT header layout is bit-exact") {
  const Grid g({2, 3}, std::vector<double>{1, 2, 3, 4, 5, 6});
  const auto bytes = encode_dfvt(g);
  REQUIRE(bytes.size() == 4 + 2 + 1 + 1 + 2 * 4 + 6 * 4);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "DFVT");
  CHECK(bytes[4] == 1);
  CHECK(bytes[5] == 0);
  CHECK(bytes[6] == 1);
  CHECK(bytes[7] == 2);
  CHECK(bytes[8] == 2);
  CHECK(bytes[12] == 3);
  // 1.0f = 0x3f800000 little-endian
  CHECK(bytes[16] == 0x00);
  CHECK(bytes[17] == 0x00);
  CHECK(bytes[18] == 0x80);
  CHECK(bytes[19] == 0x3f);
}

TEST_CASE("DFVT round trip equals float32 rounding of the input") {
  // Property over random shapes: decode(encode(g)) == float32(g) elementwise.
  RngStream rng(99);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t rank = 1 + rng.below(4);
    Extents dims;
    for (std::size_t i = 0; i < rank; ++i) dims.push_back(1 + rng.below(5));
    const Grid g = rng.gaussian(dims);
    std::stringstream ss;
    write_dfvt(ss, g);
    const Grid back = read_dfvt(ss);
    REQUIRE(back.dims() == g.dims());
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(back[i] == static_cast<double>(static_cast<float>(g[i])));
  }
}

TEST_CASE("DFVT decoder rejects malformed streams") {
  auto decode = [](std::string s) {
    std::stringstream ss(s);
    return read_dfvt(ss);
  };
  CHECK(kind_of([&] { decode("DFVX"); }) == ErrorKind::Format);
  CHECK(kind_of([&] { decode(std::string("XXXX\x01\x00\x01\x01", 8)); }) == ErrorKind::Format);
  CHECK(kind_of([&] { decode(std::string("DFVT\x02\x00\x01\x01", 8)); }) == ErrorKind::Format);
  CHECK(kind_of([&] { decode(std::string("DFVT\x01\x00\x02\x01", 8)); }) == ErrorKind::Format);
  CHECK(kind_of([&] { decode(std::string("DFVT\x01\x00\x01\x01\x02\x00\x00\x00\x00", 13)); }) ==
        ErrorKind::Format);
}

TEST_CASE("grid byte accounting tracks live and peak bytes") {
  reset_grid_peak();
  const auto before = grid_memory();
  {
    Grid a({1000});
    Grid b = a;
    CHECK(grid_memory().live_bytes == before.live_bytes + 16000);
    Grid c = std::move(b);
    CHECK(grid_memory().live_bytes == before.live_bytes + 16000);
  }
  CHECK(grid_memory().live_bytes == before.live_bytes);
  CHECK(grid_memory().peak_bytes >= before.live_bytes + 16000);
}
