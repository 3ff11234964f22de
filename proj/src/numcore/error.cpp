#include "dfv/numcore/error.hpp"

namespace dfv {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidDimension: return "invalid-dimension";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::UnsupportedFamily: return "unsupported-family";
    case ErrorKind::Condition: return "condition";
    case ErrorKind::Layer: return "layer";
    case ErrorKind::Data: return "data";
    case ErrorKind::Kind: return "kind";
    case ErrorKind::Parameter: return "parameter";
    case ErrorKind::Index: return "index";
    case ErrorKind::SingularTime: return "singular-time";
    case ErrorKind::Exhausted: return "exhausted";
    case ErrorKind::UndefinedRegion: return "undefined-region";
    case ErrorKind::InsufficientFrames: return "insufficient-frames";
    case ErrorKind::UnsupportedShape: return "unsupported-shape";
    case ErrorKind::Config: return "config";
    case ErrorKind::Format: return "format";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + " error: " + message), kind_(kind) {}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace dfv
