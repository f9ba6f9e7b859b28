#pragma once

// Watching a process only on a subset A of states: the A-hit subsequence,
// the stationary law conditioned on A, the censored chain's transition
// matrix (stochastic complement), and checks that every A-hit is
// distributed as pi_A when the process starts from pi_A.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "emclab/core.hpp"
#include "emclab/oracle.hpp"
#include "emclab/process.hpp"

namespace emclab {

class CensorSet {
 public:
  /// Members must be nonempty, distinct and inside [0, n).
  CensorSet(std::vector<State> members, std::size_t n);
  static CensorSet from_labels(const std::vector<std::string>& labels, const StateSpace& space);

  const std::vector<State>& members() const noexcept { return members_; }
  const std::vector<State>& complement() const noexcept { return complement_; }
  std::size_t num_states() const noexcept { return in_.size(); }
  bool contains(State s) const { return s < in_.size() && in_[s]; }

 private:
  std::vector<State> members_;
  std::vector<State> complement_;
  std::vector<bool> in_;
};

struct HitSequence {
  std::vector<std::size_t> times;  ///< tau_0 < tau_1 < ...
  std::vector<State> states;
  std::size_t size() const noexcept { return times.size(); }
  bool operator==(const HitSequence&) const = default;
};

/// Keeps the positions of `traj` that fall in A; times are absolute
/// (trajectory origin added).
HitSequence a_hits(const Trajectory& traj, const CensorSet& a);

/// pi_A(x) = pi(x) / pi(A) on A, 0 elsewhere. Mass error (ValidationError)
/// when pi(A) = 0.
ProbDist conditional_on(const ProbDist& pi, const CensorSet& a);

struct CensoredMatrix {
  StochasticMatrix matrix;      ///< over members(), in that order
  std::vector<State> members;
  double condition = 1.0;       ///< 2-norm condition number of I - P_BB
  bool ill_conditioned = false; ///< condition > 1e8
};

/// P_AA + P_AB (I - P_BB)^{-1} P_BA. StructuralError when I - P_BB is
/// singular (some complement state never returns to A).
CensoredMatrix censored_matrix(const StochasticMatrix& p, const CensorSet& a);

/// Restriction of a full-space law to A's coordinates (mass outside A must be 0).
ProbDist restrict_to(const ProbDist& dist, const CensorSet& a);
/// Embeds a law over A back into the full space.
ProbDist embed(const ProbDist& dist_on_a, const CensorSet& a);

/// Exact law of the k-th A-hit, k = 0..count-1, for a Markov chain started
/// from `initial` supported on A: initial C^k with C the censored matrix.
std::vector<ProbDist> exact_hit_distributions(const StochasticMatrix& p, const CensorSet& a,
                                              const ProbDist& initial, std::size_t count);

struct HitCheckOptions {
  std::size_t hits = 5;
  std::size_t samples = 50000;
  std::uint64_t seed = 0;
  /// Horizon used to read the exact first-order matrix off the oracle.
  std::size_t oracle_horizon = 6;
  std::size_t cap = kDefaultEnumerationCap;
  std::size_t max_retries = 6;
  unsigned threads = 1;
};

struct HitRow {
  std::size_t k = 0;
  double tv = 0.0;
  std::size_t n_effective = 0;
  std::optional<double> exact_tv;  ///< Markov parents only
};

struct HitReport {
  std::vector<State> members;
  ProbDist pi;
  ProbDist pi_a;
  std::vector<HitRow> per_hit;
  std::size_t rejected = 0;
  std::size_t initial_horizon = 0;
  double tolerance = 0.0;
  double max_tv = 0.0;
  bool passed = false;
  bool markov_parent = false;
  std::string note;
};

/// Samples the parent started from pi_A and compares the empirical law of
/// each of the first `hits` A-hits to pi_A. Requires the parent's exact
/// first-order schedule to be homogeneous, irreducible and aperiodic.
/// Tolerance: 3 sqrt(n / 2N) + 0.005.
HitReport a_hit_distribution_check(const ProcessModel& parent, const CensorSet& a,
                                   const HitCheckOptions& options = {});

}  // namespace emclab
