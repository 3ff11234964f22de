#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>

#include "config.hpp"

namespace dfv::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kConfig = 2, kGeometry = 3, kNoOp = 4, kOracleUnavailable = 5 };

/// Raised by commands that end with one of the fixed non-error exit codes.
class CliExit : public std::runtime_error {
 public:
  CliExit(int code, const std::string& what) : std::runtime_error(what), code_(code) {}
  int code() const noexcept { return code_; }

 private:
  int code_;
};

struct RunOptions {
  std::filesystem::path out;          // overrides output.dir
  std::optional<std::uint64_t> seed;  // overrides seed
};

inline constexpr const char* kCommands[] = {"train", "edit", "oracle", "memest", "bench", "metrics", "dataset-gen"};

/// Runs one subcommand; throws dfv::Error or CliExit.
void run_command(const std::string& command, Config& cfg, const RunOptions& opt, std::ostream& log);

/// Exit code for an exception escaping run_command (and the message to show).
int exit_code_of(const std::exception& e);

}  // namespace dfv::cli
