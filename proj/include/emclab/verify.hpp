#pragma once

// End-to-end verification of the equivalent-chain claims on the built-in
// scenarios. Every check carries the tolerance it was held to. The report
// payload is a deterministic function of (scenario, seed, inputs).

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "emclab/oracle.hpp"

namespace emclab {

struct CheckResult {
  std::string name;
  std::string scenario;
  int criterion = 0;  ///< acceptance criterion number, 0 when auxiliary
  bool passed = false;
  double value = 0.0;
  double tolerance = 0.0;
  std::string comparison;  ///< "<=", ">=", "==" ...
  std::string detail;
};

struct VerifyOptions {
  std::uint64_t seed = 0;
  std::size_t cap = kDefaultEnumerationCap;
  unsigned threads = 1;
  /// Optional extra matrix file pushed through the structure, stationary and
  /// censoring checks. A file that does not load is a failed check.
  std::optional<std::string> matrix_path;
};

struct VerifyReport {
  std::string scenario;
  std::uint64_t seed = 0;
  std::vector<CheckResult> checks;
  bool all_passed = false;

  const CheckResult* first_failure() const;
};

/// `scenario` is one of scenario_names() or "all".
VerifyReport run_verification(std::string_view scenario, const VerifyOptions& options = {});

}  // namespace emclab
