#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace emclab {

/// Error categories. The numeric values double as CLI exit codes and as the
/// status codes of the C API.
enum class ErrorKind : int {
  validation = 1,    ///< malformed input, violated precondition
  structural = 2,    ///< a chain hypothesis fails (reducible, periodic, ...)
  size = 3,          ///< enumeration cap exceeded
  verification = 4,  ///< a checked claim did not hold
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Base of every exception thrown by the library. The message is prefixed
/// with the module that raised it, e.g. "state-core: make_dist: ...".
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string_view module, const std::string& what);

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& module() const noexcept { return module_; }
  /// The message without the module prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string module_;
  std::string detail_;
};

class ValidationError : public Error {
 public:
  ValidationError(std::string_view module, const std::string& what)
      : Error(ErrorKind::validation, module, what) {}
};

class StructuralError : public Error {
 public:
  StructuralError(std::string_view module, const std::string& what)
      : Error(ErrorKind::structural, module, what) {}
};

class SizeError : public Error {
 public:
  SizeError(std::string_view module, const std::string& what)
      : Error(ErrorKind::size, module, what) {}
};

class VerificationError : public Error {
 public:
  VerificationError(std::string_view module, const std::string& what)
      : Error(ErrorKind::verification, module, what) {}
};

}  // namespace emclab
