#include "emclab/errors.hpp"

namespace emclab {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::validation: return "validation";
    case ErrorKind::structural: return "structural";
    case ErrorKind::size: return "size";
    case ErrorKind::verification: return "verification";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, std::string_view module, const std::string& what)
    : std::runtime_error(std::string(module) + ": " + what),
      kind_(kind),
      module_(module),
      detail_(what) {}

}  // namespace emclab
