#pragma once

// Finite-state discrete-time processes described by a history-conditioned
// next-state law, plus seeded sampling of trajectories and ensembles.
//
// Process families:
//   memoryless     a Markov chain with transition matrix P
//   kth_order      the next state depends on the last k states (k >= 2)
//   reinforced     P[a][b] reweighted by 1 + beta * visits(b) / len(history)
//   regime_switch  observed state driven by a hidden regime chain
//   markov_schedule  a time-inhomogeneous Markov chain P_0, P_1, ...; this is
//                  how an equivalent Markov chain is itself run as a process
//
// All randomness lives in the samplers; conditional_next is pure.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "emclab/core.hpp"
#include "json.hpp"

namespace emclab {

struct MemorylessParams {
  StochasticMatrix transition;
};

/// Contexts are encoded base n, oldest state most significant.
struct KthOrderParams {
  unsigned order = 2;
  std::vector<ProbDist> law;  ///< indexed by context code, size n^order
  ProbDist initial_joint;     ///< law of the first `order` states, size n^order
};

struct ReinforcedParams {
  StochasticMatrix base;
  double beta = 0.0;
};

struct RegimeSwitchParams {
  StochasticMatrix regime_chain;
  ProbDist initial_regime;
  std::vector<StochasticMatrix> per_regime;
};

/// X_{t+1} ~ schedule.at(t).row(X_t).
struct ScheduledMarkovParams {
  MatrixSchedule schedule;
};

using ModelParams = std::variant<MemorylessParams, KthOrderParams, ReinforcedParams,
                                 RegimeSwitchParams, ScheduledMarkovParams>;

class ProcessModel {
 public:
  static ProcessModel memoryless(StateSpace space, ProbDist initial, StochasticMatrix p);
  static ProcessModel kth_order(StateSpace space, unsigned order, std::vector<ProbDist> law,
                                ProbDist initial_joint);
  static ProcessModel reinforced(StateSpace space, ProbDist initial, StochasticMatrix base,
                                 double beta);
  static ProcessModel regime_switch(StateSpace space, ProbDist initial,
                                    StochasticMatrix regime_chain, ProbDist initial_regime,
                                    std::vector<StochasticMatrix> per_regime);
  static ProcessModel markov_schedule(StateSpace space, ProbDist initial, MatrixSchedule schedule);

  const StateSpace& space() const noexcept { return space_; }
  std::size_t size() const noexcept { return space_.size(); }
  /// Law of the state at time 0.
  const ProbDist& initial() const noexcept { return initial_; }
  const ModelParams& params() const noexcept { return params_; }
  std::string_view kind() const noexcept;
  bool is_markov() const noexcept {
    return std::holds_alternative<MemorylessParams>(params_) ||
           std::holds_alternative<ScheduledMarkovParams>(params_);
  }

  /// Pr(next = . | full history), history[0] being the state at time 0.
  ProbDist conditional_next(std::span<const State> history) const;

  /// Same dynamics with the time-0 law replaced. For kth_order models the
  /// initial joint is reweighted on its first coordinate, which keeps the
  /// conditional law of the remaining prefix given the first state.
  ProcessModel with_initial(const ProbDist& initial) const;

  /// Hex digest of the canonical JSON form.
  std::string fingerprint() const;

 private:
  ProcessModel(StateSpace space, ProbDist initial, ModelParams params);

  StateSpace space_;
  ProbDist initial_;
  ModelParams params_;
  /// kth_order only: prefix_marginals_[L] is the law of the first L states.
  std::vector<std::vector<double>> prefix_marginals_;
};

/// Parses a model specification (see docs/model_format.md).
ProcessModel build_model(const nlohmann::json& spec);
ProcessModel build_model_from_file(const std::string& path);
nlohmann::json model_to_json(const ProcessModel& model);

/// Free-function form of ProcessModel::conditional_next.
ProbDist conditional_next(const ProcessModel& model, const Trajectory& history);

/// Stationary law of the lifted k-block chain of a kth-order law, by power
/// iteration on its lazy version. Size n^order.
ProbDist stationary_prefix_joint(std::size_t n, unsigned order, const std::vector<ProbDist>& law);

// Sampling

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t z) noexcept;

/// Per-trajectory seed: mix64(master + 0x9E3779B97F4A7C15 * (index + 1)).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept;

/// States 0..horizon, drawn sequentially from a std::mt19937_64 seeded with
/// `seed`. A longer horizon with the same seed extends the same path.
Trajectory sample_trajectory(const ProcessModel& model, std::size_t horizon, std::uint64_t seed);

struct TrajectoryEnsemble {
  std::vector<Trajectory> trajectories;
  std::vector<std::uint64_t> seeds;
  std::uint64_t master_seed = 0;
  std::size_t horizon = 0;
  std::string fingerprint;
  std::vector<std::string> labels;

  std::size_t size() const noexcept { return trajectories.size(); }
  std::size_t num_states() const noexcept { return labels.size(); }
  bool operator==(const TrajectoryEnsemble&) const = default;
};

/// Trajectory i uses derive_seed(master_seed, i). Output does not depend on
/// the thread count.
TrajectoryEnsemble sample_ensemble(const ProcessModel& model, std::size_t horizon,
                                   std::size_t count, std::uint64_t master_seed,
                                   unsigned threads = 1);

/// Header line followed by one {"seed", "states"} object per line.
std::string ensemble_to_jsonl(const TrajectoryEnsemble& ensemble);
TrajectoryEnsemble ensemble_from_jsonl(std::string_view text);

}  // namespace emclab
