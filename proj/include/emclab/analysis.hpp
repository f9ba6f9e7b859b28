#pragma once

// Structural and asymptotic analysis of a first-order transition matrix:
// communicating classes, periods, primitivity certificate, stationary law,
// and distance-to-stationarity profiles.

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "emclab/core.hpp"
#include "emclab/oracle.hpp"
#include "emclab/process.hpp"

namespace emclab {

struct StructureReport {
  /// The positive-entry digraph is strongly connected.
  bool irreducible = false;
  /// Every state has period 1.
  bool aperiodic = false;
  /// Smallest k with P^k entrywise positive. Present exactly when the chain
  /// is irreducible and aperiodic; bounded by (n-1)^2 + 1.
  std::optional<unsigned> certificate;
  /// gcd of closed-walk lengths through each state; 0 when no closed walk exists.
  std::vector<unsigned> periods;
  std::vector<std::vector<State>> classes;
  std::vector<std::vector<State>> closed_classes;

  bool primitive() const noexcept { return certificate.has_value(); }
};

StructureReport structure(const StochasticMatrix& p);

struct StationaryResult {
  ProbDist pi;
  /// max_b |pi[b] - (pi P)[b]|
  double residual = 0.0;
  /// Power iteration cross-check, run only for aperiodic chains.
  bool power_checked = false;
  double power_agreement = 0.0;  ///< TV(direct, power)
  std::size_t power_iterations = 0;
};

/// Solves pi (P - I) = 0 with sum(pi) = 1 directly. Requires irreducibility;
/// periodic chains are fine. Throws StructuralError naming the closed
/// classes otherwise.
StationaryResult stationary_detailed(const StochasticMatrix& p);
ProbDist stationary(const StochasticMatrix& p);

/// pi_{k+1} = pi_k P until successive TV <= tol or max_iterations.
ProbDist power_iteration(const StochasticMatrix& p, const ProbDist& start, double tol = 1e-13,
                         std::size_t max_iterations = 10000, std::size_t* iterations = nullptr);

inline constexpr double kErgodicLimitThreshold = 1e-8;

struct ConvergenceProfile {
  std::vector<std::pair<std::size_t, double>> rows;  ///< (t, TV(pi_t, pi))
  ProbDist stationary;
  double limit_threshold = kErgodicLimitThreshold;
  bool limit_reached = false;  ///< TV at t_max <= limit_threshold
};

/// Requires an irreducible, aperiodic P.
ConvergenceProfile convergence_profile(const ProbDist& initial, const StochasticMatrix& p,
                                       std::size_t t_max);

/// Two-column CSV "t,tv".
std::string profile_csv(const ConvergenceProfile& profile);

struct Theorem1Check {
  std::size_t horizon = 0;
  double max_deviation = 0.0;
  double tolerance = 1e-9;
  bool passed = false;
  ProbDist stationary;
  StochasticMatrix matrix;
};

/// max over t <= T of ||(pi_t - pi) - (pi~_t - pi~)||_inf with pi_t from the
/// enumeration oracle and pi~_t propagated through the equivalent chain.
/// Requires a homogeneous exact schedule whose matrix is irreducible and
/// aperiodic; StructuralError otherwise.
Theorem1Check theorem1_identity_check(const ProcessModel& parent, std::size_t horizon,
                                      std::size_t cap = kDefaultEnumerationCap);

}  // namespace emclab
