#pragma once

// Probability vectors, row-stochastic matrices, time-indexed matrix
// schedules and trajectories over a finite state space. Everything here is
// immutable once constructed.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace emclab {

/// Dense state index in [0, n).
using State = std::uint32_t;

/// Tolerance for "sums to one" and for entries slightly above one.
inline constexpr double kSumTolerance = 1e-9;

/// An entry counts as a positive transition when it exceeds this.
inline constexpr double kPositiveThreshold = 1e-15;

/// Ordered, distinct state labels. States are referred to by index
/// everywhere else; labels only matter at the I/O boundary.
class StateSpace {
 public:
  explicit StateSpace(std::vector<std::string> labels);

  /// Labels "0", "1", ..., "n-1".
  static StateSpace indexed(std::size_t n);

  std::size_t size() const noexcept { return labels_.size(); }
  const std::string& label(State s) const;
  State index_of(std::string_view label) const;
  const std::vector<std::string>& labels() const noexcept { return labels_; }

  bool operator==(const StateSpace&) const = default;

 private:
  std::vector<std::string> labels_;
};

class ProbDist {
 public:
  /// Divides by the total mass. Rejects negative entries and zero mass.
  static ProbDist normalize(std::span<const double> weights);

  /// No normalization: entries must lie in [0,1] and sum to one within
  /// kSumTolerance.
  static ProbDist strict(std::vector<double> weights);

  static ProbDist point(std::size_t n, State s);
  static ProbDist uniform(std::size_t n);

  std::size_t size() const noexcept { return weights_.size(); }
  double operator[](State s) const { return weights_[s]; }
  std::span<const double> weights() const noexcept { return weights_; }

  bool operator==(const ProbDist&) const = default;

 private:
  explicit ProbDist(std::vector<double> w) : weights_(std::move(w)) {}
  std::vector<double> weights_;
};

/// make_dist: normalizing constructor.
inline ProbDist make_dist(std::span<const double> weights) {
  return ProbDist::normalize(weights);
}

class StochasticMatrix {
 public:
  /// Row-major n*n entries; every row must already be a distribution.
  static StochasticMatrix strict(std::size_t n, std::vector<double> row_major);
  static StochasticMatrix from_rows(const std::vector<std::vector<double>>& rows);
  static StochasticMatrix identity(std::size_t n);

  std::size_t size() const noexcept { return n_; }
  double operator()(State a, State b) const { return data_[a * n_ + b]; }
  std::span<const double> row(State a) const {
    return std::span<const double>(data_).subspan(a * n_, n_);
  }
  std::span<const double> data() const noexcept { return data_; }
  ProbDist row_dist(State a) const;

  bool operator==(const StochasticMatrix&) const = default;

 private:
  StochasticMatrix(std::size_t n, std::vector<double> d) : n_(n), data_(std::move(d)) {}
  std::size_t n_ = 0;
  std::vector<double> data_;
};

/// Row vector times matrix: result[b] = sum_a dist[a] * matrix(a, b).
ProbDist apply(const ProbDist& dist, const StochasticMatrix& matrix);

/// Half the L1 distance.
double tv_distance(const ProbDist& p, const ProbDist& q);

/// Largest absolute entrywise difference.
double max_abs_diff(std::span<const double> x, std::span<const double> y);
double max_abs_diff(const StochasticMatrix& x, const StochasticMatrix& y);

StochasticMatrix multiply(const StochasticMatrix& x, const StochasticMatrix& y);
StochasticMatrix power(const StochasticMatrix& p, unsigned k);

/// Rows of a matrix that carry no information (zero mass or zero counts)
/// and were filled by policy rather than derived from data.
using RowFlags = std::vector<bool>;

/// The family P_0, P_1, ... of first-order matrices. A homogeneous schedule
/// holds one matrix standing for every time step.
class MatrixSchedule {
 public:
  static MatrixSchedule homogeneous(StochasticMatrix p, RowFlags flagged = {});
  static MatrixSchedule time_varying(std::vector<StochasticMatrix> slices,
                                     std::vector<RowFlags> flagged = {});

  bool is_homogeneous() const noexcept { return homogeneous_; }
  std::size_t size() const noexcept { return matrices_.front().size(); }
  /// Number of stored matrices (1 when homogeneous).
  std::size_t length() const noexcept { return matrices_.size(); }
  /// True when the schedule can drive `steps` transitions.
  bool covers(std::size_t steps) const noexcept {
    return homogeneous_ || steps <= matrices_.size();
  }

  /// P_t. Throws ValidationError when t is beyond a time-varying schedule.
  const StochasticMatrix& at(std::size_t t) const;
  const RowFlags& flagged(std::size_t t) const;
  const std::vector<StochasticMatrix>& matrices() const noexcept { return matrices_; }

 private:
  MatrixSchedule(std::vector<StochasticMatrix> m, std::vector<RowFlags> f, bool h);
  std::vector<StochasticMatrix> matrices_;
  std::vector<RowFlags> flagged_;
  bool homogeneous_ = false;
};

struct Trajectory {
  std::vector<State> states;
  std::size_t origin = 0;

  std::size_t length() const noexcept { return states.size(); }
  bool operator==(const Trajectory&) const = default;
};

/// Throws ValidationError when the trajectory is empty or leaves [0, n).
void validate_trajectory(const Trajectory& traj, std::size_t n, std::string_view module);

}  // namespace emclab
