#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dfv {

enum class ErrorKind {
  InvalidDimension,
  Shape,
  Domain,
  UnsupportedFamily,
  Condition,
  Layer,
  Data,
  Kind,
  Parameter,
  Index,
  SingularTime,
  Exhausted,
  UndefinedRegion,
  InsufficientFrames,
  UnsupportedShape,
  Config,
  Format,
  Io,
};

std::string_view to_string(ErrorKind kind);

// Every failure raised by the library carries a kind so callers (tests, the
// CLI exit-code map) can branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

}  // namespace dfv
