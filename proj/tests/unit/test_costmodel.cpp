#include <sstream>

#include "doctest.h"
#include "dfv/costmodel/cost.hpp"
#include "dfv/numcore/error.hpp"

using namespace dfv;
using namespace dfv::cost;

namespace {

const MemoryRow& row(const std::vector<MemoryRow>& rows, const std::string& name) {
  for (const auto& r : rows) {
    if (r.spec.name == name) return r;
  }
  FAIL("missing row " << name);
  return rows.front();
}

}  // namespace

TEST_CASE("attention_bytes examples") {
  CHECK(attention_bytes({"unit", false, 1, 1, 1, 1, 4}) == 4);
  // 2 * 4096^2 * 4 * 80 bytes is exactly 10 GiB.
  CHECK(attention_bytes({"HunyuanDiT", false, 2, 1, 4096, 80, 4}) == 10ull * (1ull << 30));
  const double cog = double(attention_bytes({"CogVideoX-5B", false, 2, 48, 11490, 40, 4})) / kGiB;
  CHECK(cog == doctest::Approx(2.0 * 48 * 11490.0 * 11490.0 * 4 * 40 / 1073741824.0));
  CHECK(std::abs(cog / 1871.0 - 1.0) < 0.05);
  CHECK_THROWS_AS(attention_bytes({"sd", true}), Error);
  CHECK_THROWS_AS(attention_bytes({"zero", false, 1, 0, 1, 1, 4}), Error);
  CHECK_THROWS_AS(attention_bytes({"huge", false, 1u << 31, 1u << 31, 1u << 31, 1, 4}), Error);
}

TEST_CASE("attention_bytes is multiplicative in every field") {
  const ArchSpec base{"b", false, 3, 5, 7, 2, 4};
  const std::uint64_t b = attention_bytes(base);
  ArchSpec s = base;
  s.heads *= 2;
  CHECK(attention_bytes(s) == 2 * b);
  s = base;
  s.batch *= 3;
  CHECK(attention_bytes(s) == 3 * b);
  s = base;
  s.seq *= 2;
  CHECK(attention_bytes(s) == 4 * b);
  s = base;
  s.blocks *= 5;
  CHECK(attention_bytes(s) == 5 * b);
  s = base;
  s.dtype_bytes = 2;
  CHECK(2 * attention_bytes(s) == b);
}

TEST_CASE("reference memory table") {
  const auto rows = memory_table(reference_architectures());
  REQUIRE(rows.size() == 6);
  for (const auto& r : rows) {
    if (r.spec.multi_scale) {
      CHECK(r.verdict == Verdict::OutOfModel);
      CHECK(!r.estimate_gib);
    } else {
      CHECK(r.verdict == Verdict::Pass);
    }
  }
  CHECK(*row(rows, "HunyuanDiT").estimate_gib == 10.0);
  CHECK(std::abs(*row(rows, "Wan2.1-14B").relative_error) < 0.05);
  CHECK(std::abs(*row(rows, "CogVideoX-5B").relative_error) < 0.05);
  const double hv = *row(rows, "HunyuanVideo").relative_error;
  CHECK(std::abs(hv) > 0.05);
  CHECK(std::abs(hv) < 0.10);

  std::ostringstream csv;
  write_memory_csv(csv, rows);
  CHECK(csv.str().find("StableDiffusion,multi-scale,32,4,1,n/a,7,n/a,out-of-model\n") != std::string::npos);
  CHECK(csv.str().find("HunyuanDiT,[2,1,4096,4096],80,4,1,10.0000,10,0.0000,PASS\n") != std::string::npos);

  const auto custom = memory_table({{"mine", false, 1, 2, 64, 3, 4}});
  CHECK(custom[0].verdict == Verdict::NoReference);
  std::ostringstream text;
  write_memory_text(text, custom);
  CHECK(text.str().find("n/a") != std::string::npos);
}

TEST_CASE("arch specs from flat keys") {
  const auto specs = arch_specs_from_keys({{"arch.a.name", "Toy"},
                                           {"arch.a.batch", "2"},
                                           {"arch.a.heads", "3"},
                                           {"arch.a.seq", "10"},
                                           {"arch.a.blocks", "4"},
                                           {"arch.b.shape", "multi-scale"},
                                           {"arch.b.reference_gb", "7"},
                                           {"schedule.steps", "50"}});
  REQUIRE(specs.size() == 2);
  CHECK(specs[0].name == "Toy");
  CHECK(attention_bytes(specs[0]) == 2ull * 3 * 100 * 4 * 4);
  CHECK(specs[1].name == "b");
  CHECK(specs[1].multi_scale);
  CHECK(*specs[1].reference_gb == 7.0);

  try {
    arch_specs_from_keys({{"arch.bad.heads", "-1"}});
    FAIL("expected a config error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
    CHECK(std::string(e.what()).find("'bad'") != std::string::npos);
  }
  CHECK_THROWS_AS(arch_specs_from_keys({{"arch.z.seq", "0"}}), Error);
  CHECK_THROWS_AS(arch_specs_from_keys({{"arch.z.colour", "red"}}), Error);
}

TEST_CASE("efficiency reports are quotients of the measurements") {
  RunMeasurement e{{50, 100, {{2, 50}}}, 30.0, 400, {1, 2}, 50};
  RunMeasurement s{{50, 50, {{1, 50}}}, 20.0, 200, {1, 2}, 50};
  const EfficiencyReport r = measure_efficiency(e, s);
  CHECK(r.model_calls_edit == 50);
  CHECK(r.items_edit == 2 * r.items_sample);
  CHECK(r.latency_ratio == 1.5);
  CHECK(r.memory_ratio == 2.0);
  s.steps = 49;
  CHECK_THROWS_AS(measure_efficiency(e, s), Error);
  s.steps = 50;
  s.geometry = {2, 2};
  CHECK_THROWS_AS(measure_efficiency(e, s), Error);
}
