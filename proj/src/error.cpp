#include "heatflow/error.hpp"

namespace heatflow {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::parameter: return "parameter";
    case ErrorKind::resolution: return "resolution";
    case ErrorKind::domain: return "domain";
    case ErrorKind::absolute_continuity: return "absolute_continuity";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::dependency: return "dependency";
    case ErrorKind::search_range: return "search_range";
    case ErrorKind::usage: return "usage";
    case ErrorKind::syntax: return "syntax";
  }
  return "unknown";
}

}  // namespace heatflow
