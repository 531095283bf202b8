#include "closedgeo/errors.hpp"

namespace closedgeo {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::input: return "input";
    case ErrorKind::domain: return "domain";
    case ErrorKind::resolution: return "resolution";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::consistency: return "consistency";
  }
  return "unknown";
}

}  // namespace closedgeo
