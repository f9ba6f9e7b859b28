#pragma once

// Brute-force enumeration of every trajectory up to a small horizon. This is
// the ground truth the rest of the library is tested against: exact joint
// laws, marginals, first-order matrices, the literal trajectory sum, and a
// detector for history dependence.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "emclab/core.hpp"
#include "emclab/process.hpp"

namespace emclab {

inline constexpr std::size_t kDefaultEnumerationCap = 2'000'000;

/// Histories lighter than this are skipped when forming conditionals.
inline constexpr double kHistoryMassFloor = 1e-15;

/// n^(horizon+1), or throws SizeError when that exceeds `cap`.
std::size_t enumeration_size(std::size_t n, std::size_t horizon, std::size_t cap,
                             std::string_view module = "exact-oracle");

/// Exact law of (X_0, ..., X_T), stored densely in lexicographic order
/// (X_0 most significant).
class JointTable {
 public:
  JointTable(std::size_t num_states, std::size_t horizon, std::vector<double> probabilities);
  /// `conditionals[t][h * n + b]` = Pr(X_{t+1} = b | history code h of length t + 1),
  /// as used by the chain rule that produced the table.
  JointTable(std::size_t num_states, std::size_t horizon, std::vector<double> probabilities,
             std::vector<std::vector<double>> conditionals);

  std::size_t horizon() const noexcept { return horizon_; }
  std::size_t num_states() const noexcept { return n_; }
  std::size_t entries() const noexcept { return probs_.size(); }
  std::span<const double> probabilities() const noexcept { return probs_; }
  double probability(std::span<const State> trajectory) const;

  /// Law of (X_0, ..., X_{len-1}) as a dense table of size n^len.
  std::vector<double> prefix_law(std::size_t len) const;

  /// Decodes entry `code` into states.
  std::vector<State> decode(std::size_t code) const;
  /// Pr(X_{t+1} = b | X_0..X_t = history `h`), h < n^(t+1). Taken from the
  /// stored chain-rule conditionals when present, else divided out of the
  /// joint law. `law` is prefix_law(t + 2), `mass` the history's mass.
  double conditional(std::size_t t, std::size_t h, State b, std::span<const double> law,
                     double mass) const;

 private:
  std::size_t n_;
  std::size_t horizon_;
  std::vector<double> probs_;
  std::vector<std::vector<double>> conditionals_;
};

JointTable joint_table(const ProcessModel& model, std::size_t horizon,
                       std::size_t cap = kDefaultEnumerationCap);

/// pi_t.
ProbDist marginal(const JointTable& joint, std::size_t t);

struct FirstOrderMatrix {
  StochasticMatrix matrix;
  /// Rows whose state has zero probability at time t; filled uniformly.
  RowFlags flagged;
};

/// P_t with entries Pr(X_{t+1} = b | X_t = a).
FirstOrderMatrix first_order_matrix(const JointTable& joint, std::size_t t);

struct HistoryGap {
  double gap = 0.0;
  std::size_t time = 0;
  /// Full history (X_0..X_t) whose next-step conditional deviates most from P_t.
  std::vector<State> witness;
  State next_state = 0;
  double witness_conditional = 0.0;
  double first_order = 0.0;
  /// History ending in the same state with the opposite extreme conditional.
  std::vector<State> contrast;
  double contrast_conditional = 0.0;
};

/// Max over positive-probability histories h = (a_0..a_t) and next states b
/// of |Pr(X_{t+1} = b | h) - p_t(a_t, b)|.
HistoryGap history_gap(const JointTable& joint, std::size_t t);

/// Literal sum over all paths ending in `a` of
/// initial(a_0) * p_0(a_0,a_1) * ... * p_{t-1}(a_{t-1}, a).
double trajectory_sum(const ProbDist& initial, const MatrixSchedule& schedule, std::size_t t,
                      State a, std::size_t cap = kDefaultEnumerationCap);

/// Header a_0..a_T,probability; one line per positive-probability path.
std::string joint_table_csv(const JointTable& joint, const StateSpace* labels = nullptr);

}  // namespace emclab
