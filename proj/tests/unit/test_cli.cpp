#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "commands.hpp"
#include "config.hpp"
#include "dfv/numcore/dfvt.hpp"
#include "dfv/numcore/error.hpp"
#include "io.hpp"

using namespace dfv;
using namespace dfv::cli;
namespace fs = std::filesystem;

namespace {

Config parse(const std::string& text) {
  std::istringstream in(text);
  return Config::parse(in, "test.cfg");
}

std::string message_of(auto&& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("dfv_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("config parsing") {
  const Config c = parse("# comment\nseed = 7\n\nschedule.steps=500  # trailing\nedit.er_tokens = 0, 2\nflag = yes\n");
  CHECK(c.u64("seed") == 7);
  CHECK(c.integer("schedule.steps") == 500);
  CHECK(c.indices("edit.er_tokens") == std::vector<std::size_t>{0, 2});
  CHECK(c.flag("flag", false));
  CHECK(c.real("missing", 1.5) == 1.5);
  CHECK(c.unused().empty());

  CHECK(message_of([] { parse("a = 1\na = 2\n"); }).find("test.cfg:2") != std::string::npos);
  CHECK(message_of([] { parse("just words\n"); }).find("expected key=value") != std::string::npos);
  CHECK(message_of([&] { c.str("dataset.kind"); }).find("'dataset.kind'") != std::string::npos);
  CHECK(message_of([&] { c.real("flag"); }).find("test.cfg:6") != std::string::npos);
}

TEST_CASE("config hash ignores order and comments") {
  CHECK(parse("a=1\nb=2\n").hash() == parse("# x\nb = 2\na = 1\n").hash());
  CHECK(parse("a=1\n").hash() != parse("a=2\n").hash());
  Config c = parse("a=1\n");
  c.set("seed", "3");
  CHECK(c.u64("seed") == 3);
}

TEST_CASE("frame encoding and PGM round trip") {
  Grid v({1, 2, 2, 1}, std::vector<double>{0.0, 0.5, 1.0, 2.0});
  const std::string f = encode_frame(v, 0);
  CHECK(f.substr(0, 11) == "P5\n2 2\n255\n");
  CHECK(static_cast<unsigned char>(f[11]) == 0);
  CHECK(static_cast<unsigned char>(f[12]) == 128);  // 127.5 rounds half up
  CHECK(static_cast<unsigned char>(f[14]) == 255);  // clamped

  const fs::path dir = scratch("pgm");
  write_file(dir / "m.pgm", f);
  const Grid m = load_mask(dir / "m.pgm", 3);
  CHECK(m.dims() == Extents{3, 2, 2});
  CHECK(m == Grid({3, 2, 2}, std::vector<double>{0, 1, 1, 1, 0, 1, 1, 1, 0, 1, 1, 1}));
  CHECK_THROWS_AS(encode_frame(Grid({1, 2, 2, 2}), 0), Error);
}

TEST_CASE("commands: exit codes and reproducible manifests") {
  const fs::path dir = scratch("cmd");
  Config none = parse("seed = 1\n");
  RunOptions opt;
  opt.out = dir / "a";
  std::ostringstream log;
  try {
    run_command("dataset-gen", none, opt, log);
    FAIL("expected a config error");
  } catch (const std::exception& e) {
    CHECK(exit_code_of(e) == kConfig);
    CHECK(std::string(e.what()).find("dataset.kind") != std::string::npos);
  }

  Config oracle = parse("seed = 1\nmodel.kind = toydit\n");
  try {
    run_command("oracle", oracle, opt, log);
    FAIL("expected oracle-unavailable");
  } catch (const std::exception& e) {
    CHECK(exit_code_of(e) == kOracleUnavailable);
  }

  Config ms = parse("arch.x.shape = multi-scale\n");
  try {
    run_command("memest", ms, opt, log);
    FAIL("expected no-op");
  } catch (const std::exception& e) {
    CHECK(exit_code_of(e) == kNoOp);
  }

  // An identity edit on the analytic model twice: identical manifests
  // although the transcripts carry wall-clock columns.
  const std::string gen = "seed = 4\ndataset.kind = moving-square\ndataset.count = 1\n";
  Config g = parse(gen);
  RunOptions gopt;
  gopt.out = dir / "data";
  run_command("dataset-gen", g, gopt, log);
  const std::string edit = "seed = 9\nmodel.kind = analytic\nanalytic.dims = 8,16,16,1\nanalytic.mean.0 = 0.5\n"
                           "edit.c0 = 0\nedit.c1 = 0\noutput.frames = false\nedit.source = " +
                           (dir / "data" / "clips" / "clip_0000.dfvt").string() + "\n";
  std::string manifests[2];
  for (int run = 0; run < 2; ++run) {
    Config e = parse(edit);
    RunOptions eopt;
    eopt.out = dir / ("edit" + std::to_string(run));
    run_command("edit", e, eopt, log);
    manifests[run] = read_file(eopt.out / "manifest.txt");
  }
  CHECK(manifests[0] == manifests[1]);
  CHECK(load_dfvt(dir / "edit0" / "edited.dfvt") == load_dfvt(dir / "data" / "clips" / "clip_0000.dfvt"));

  // A source that does not match the model geometry.
  Config bad = parse("seed = 9\nmodel.kind = analytic\nanalytic.dims = 4\nanalytic.mean.0 = 0\nedit.c0 = 0\n"
                     "edit.c1 = 0\nedit.source = " + (dir / "data" / "clips" / "clip_0000.dfvt").string() + "\n");
  try {
    run_command("edit", bad, opt, log);
    FAIL("expected a geometry error");
  } catch (const std::exception& e) {
    CHECK(exit_code_of(e) == kGeometry);
  }
}
