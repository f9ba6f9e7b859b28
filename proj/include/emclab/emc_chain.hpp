#pragma once

// The first-order equivalent Markov chain of a parent process: same law at
// time 0, and from state a at time t it moves with the parent's first-order
// probabilities p_t(a, .), independently of the path that led to a.

#include <cstdint>
#include <string>
#include <vector>

#include "emclab/core.hpp"
#include "emclab/oracle.hpp"
#include "emclab/process.hpp"

namespace emclab {

/// Slices closer than this are treated as the same matrix.
inline constexpr double kHomogeneityTolerance = 1e-12;

struct EmcChain {
  ProbDist initial;
  MatrixSchedule schedule;
};

/// Exact construction from the enumeration oracle, using P_0..P_{T-1}.
/// Collapses to a homogeneous schedule when every slice agrees within
/// kHomogeneityTolerance on the rows that are not flagged.
EmcChain build_emc(const ProcessModel& parent, std::size_t horizon,
                   std::size_t cap = kDefaultEnumerationCap);
EmcChain build_emc(const JointTable& joint, const ProbDist& initial);

/// Schedule slices from an exact joint table, collapsed when homogeneous.
MatrixSchedule exact_schedule(const JointTable& joint);

/// Runs the chain as a process (markov_schedule kind).
ProcessModel emc_as_model(const EmcChain& emc, const StateSpace& space);

/// pi~_t = pi_0 P_0 ... P_{t-1}.
ProbDist propagate(const EmcChain& emc, std::size_t t);

struct Propagation {
  std::vector<ProbDist> marginals;  ///< pi~_0 .. pi~_t
  /// Largest mass ever pushed through a flagged row; zero on the exact path.
  double flagged_mass = 0.0;
};
Propagation propagate_all(const EmcChain& emc, std::size_t t);

struct EstimatedMatrix {
  StochasticMatrix matrix;
  std::vector<std::uint64_t> counts;  ///< row-major n*n
  RowFlags flagged;
  std::uint64_t transitions = 0;
};

struct EstimatedSchedule {
  MatrixSchedule schedule;
  std::vector<std::vector<std::uint64_t>> counts;  ///< per slice, row-major
  std::vector<std::size_t> sparse_slices;          ///< slices with a flagged row
};

/// Pools every adjacent pair over all trajectories and times. `smoothing`
/// is an additive pseudo-count per entry (0 = raw maximum likelihood).
EstimatedMatrix estimate_homogeneous(const std::vector<Trajectory>& trajectories, std::size_t n,
                                     double smoothing = 0.0);
EstimatedMatrix estimate_homogeneous(const TrajectoryEnsemble& ensemble, double smoothing = 0.0);

/// Slice t uses only the pairs (X_t, X_{t+1}) across the ensemble.
EstimatedSchedule estimate_schedule(const std::vector<Trajectory>& trajectories, std::size_t n,
                                    double smoothing = 0.0);
EstimatedSchedule estimate_schedule(const TrajectoryEnsemble& ensemble, double smoothing = 0.0);

/// Empirical law of X_t over an ensemble.
ProbDist empirical_marginal(const std::vector<Trajectory>& trajectories, std::size_t n,
                            std::size_t t);

enum class Lemma1Mode { exact, monte_carlo };

struct Lemma1Options {
  Lemma1Mode mode = Lemma1Mode::exact;
  std::size_t samples = 100000;
  std::uint64_t seed = 0;
  std::size_t cap = kDefaultEnumerationCap;
  unsigned threads = 1;
};

struct Lemma1Row {
  std::size_t t = 0;
  double tv = 0.0;
};

struct FlaggedRow {
  std::size_t t = 0;
  State state = 0;
};

struct Lemma1Report {
  Lemma1Mode mode = Lemma1Mode::exact;
  std::string schedule_source;  ///< "exact" or "estimated"
  bool homogeneous = false;
  std::vector<Lemma1Row> rows;
  double max_tv = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  std::vector<FlaggedRow> flagged_rows;
  double flagged_mass = 0.0;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
};

/// Distance between the parent's marginals and the equivalent chain's
/// propagated marginals for t = 0..T. Exact mode compares against the
/// enumeration oracle (tolerance 1e-9); monte-carlo mode against the
/// empirical marginals of `samples` trajectories (tolerance
/// 3 sqrt(n / 2N) + 0.005).
Lemma1Report lemma1_report(const ProcessModel& parent, std::size_t horizon,
                           const Lemma1Options& options = {});

}  // namespace emclab
