#include <algorithm>
#include <atomic>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string_view>
#include <thread>

#include <CLI11.hpp>

#include "commands.hpp"

namespace {

struct Job {
  std::string config;
  std::string log;
  int code = 0;
};

const char* describe(std::string_view command) {
  if (command == "train") return "train a ToyDiT on generated clips";
  if (command == "edit") return "edit a source clip from condition c0 to c1";
  if (command == "oracle") return "compare CDFV with the twin-trajectory oracle (analytic models only)";
  if (command == "memest") return "estimate attention-map memory per timestep";
  if (command == "bench") return "evaluation counts and latency of edit against plain sampling";
  if (command == "metrics") return "quality metrics of an edited clip against its source";
  return "generate a labelled toy dataset";
}

}  // namespace

int main(int argc, char** argv) {
  using namespace dfv::cli;
  CLI::App app{"dfvlab: delta-flow video editing lab"};
  app.require_subcommand(1);
  std::vector<std::string> configs;
  std::string out;
  std::optional<std::uint64_t> seed;
  unsigned jobs = 1;
  for (const char* name : kCommands) {
    auto* sub = app.add_subcommand(name, describe(name));
    sub->add_option("--config", configs, "config file (repeat to run several)");
    sub->add_option("--out", out, "output directory (overrides output.dir)");
    sub->add_option("--seed", seed, "overrides the seed key");
    sub->add_option("--jobs", jobs, "configs run concurrently")->check(CLI::Range(1u, 256u));
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kConfig;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  // memest without a config falls back to the bundled table.
  if (configs.empty() && command != "memest") {
    std::cerr << "dfvlab " << command << ": --config is required\n";
    return kConfig;
  }
  if (configs.empty()) configs.emplace_back();

  std::vector<Job> work(configs.size());
  std::atomic<std::size_t> next{0};
  std::mutex print;
  auto worker = [&] {
    for (std::size_t i = next++; i < work.size(); i = next++) {
      Job& job = work[i];
      job.config = configs[i];
      std::ostringstream log;
      try {
        std::istringstream none;
        Config cfg = job.config.empty() ? Config::parse(none, "(no config)") : Config::load(job.config);
        RunOptions opt;
        opt.seed = seed;
        if (!out.empty()) {
          opt.out = out;
          if (configs.size() > 1) opt.out /= std::filesystem::path(job.config).stem();
        }
        run_command(command, cfg, opt, log);
      } catch (const std::exception& e) {
        job.code = exit_code_of(e);
        log << "dfvlab " << command << ": error: " << e.what() << "\n";
      }
      std::lock_guard lock(print);
      std::cerr << log.str();
    }
  };
  std::vector<std::thread> pool;
  const unsigned n = std::min<unsigned>(jobs, static_cast<unsigned>(work.size()));
  for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  int code = 0;
  for (const auto& job : work) {
    if (job.code != 0 && code == 0) code = job.code;
  }
  return code;
}
