#include "emclab/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "emclab/errors.hpp"

namespace emclab {
namespace {

constexpr std::string_view kModule = "state-core";

double checked_total(std::span<const double> w, std::string_view op) {
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!std::isfinite(w[i]) || w[i] < 0.0) {
      throw ValidationError(kModule, std::string(op) + ": invalid weight at index " +
                                         std::to_string(i) + " (" + std::to_string(w[i]) + ")");
    }
    total += w[i];
  }
  return total;
}

void check_distribution_row(std::span<const double> w, std::string_view what) {
  const double total = checked_total(w, what);
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] > 1.0 + kSumTolerance) {
      throw ValidationError(kModule, std::string(what) + ": entry " + std::to_string(i) +
                                         " exceeds 1");
    }
  }
  if (std::abs(total - 1.0) > kSumTolerance) {
    throw ValidationError(kModule, std::string(what) + ": weights sum to " +
                                       std::to_string(total) + ", expected 1");
  }
}

}  // namespace

// StateSpace

StateSpace::StateSpace(std::vector<std::string> labels) : labels_(std::move(labels)) {
  if (labels_.empty()) throw ValidationError(kModule, "state space must have at least one state");
  std::set<std::string_view> seen;
  for (const auto& l : labels_) {
    if (!seen.insert(l).second) {
      throw ValidationError(kModule, "duplicate state label '" + l + "'");
    }
  }
}

StateSpace StateSpace::indexed(std::size_t n) {
  std::vector<std::string> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = std::to_string(i);
  return StateSpace(std::move(labels));
}

const std::string& StateSpace::label(State s) const {
  if (s >= labels_.size()) {
    throw ValidationError(kModule, "state index " + std::to_string(s) + " out of range");
  }
  return labels_[s];
}

State StateSpace::index_of(std::string_view label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) {
    throw ValidationError(kModule, "unknown state label '" + std::string(label) + "'");
  }
  return static_cast<State>(it - labels_.begin());
}

// ProbDist

ProbDist ProbDist::normalize(std::span<const double> weights) {
  if (weights.empty()) throw ValidationError(kModule, "make_dist: empty weight vector");
  const double total = checked_total(weights, "make_dist");
  if (!(total > 0.0)) throw ValidationError(kModule, "make_dist: zero total mass");
  std::vector<double> w(weights.begin(), weights.end());
  for (double& x : w) x /= total;
  return ProbDist(std::move(w));
}

ProbDist ProbDist::strict(std::vector<double> weights) {
  if (weights.empty()) throw ValidationError(kModule, "distribution: empty weight vector");
  check_distribution_row(weights, "distribution");
  return ProbDist(std::move(weights));
}

ProbDist ProbDist::point(std::size_t n, State s) {
  if (s >= n) throw ValidationError(kModule, "point mass outside the state space");
  std::vector<double> w(n, 0.0);
  w[s] = 1.0;
  return ProbDist(std::move(w));
}

ProbDist ProbDist::uniform(std::size_t n) {
  if (n == 0) throw ValidationError(kModule, "uniform distribution over zero states");
  return ProbDist(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

// StochasticMatrix

StochasticMatrix StochasticMatrix::strict(std::size_t n, std::vector<double> row_major) {
  if (n == 0) throw ValidationError(kModule, "matrix must have at least one state");
  if (row_major.size() != n * n) {
    throw ValidationError(kModule, "matrix has " + std::to_string(row_major.size()) +
                                       " entries, expected " + std::to_string(n * n));
  }
  for (std::size_t a = 0; a < n; ++a) {
    check_distribution_row(std::span<const double>(row_major).subspan(a * n, n),
                           "matrix row " + std::to_string(a));
  }
  return StochasticMatrix(n, std::move(row_major));
}

StochasticMatrix StochasticMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t n = rows.size();
  std::vector<double> data;
  data.reserve(n * n);
  for (std::size_t a = 0; a < n; ++a) {
    if (rows[a].size() != n) {
      throw ValidationError(kModule, "matrix row " + std::to_string(a) + " has " +
                                         std::to_string(rows[a].size()) + " entries, expected " +
                                         std::to_string(n));
    }
    data.insert(data.end(), rows[a].begin(), rows[a].end());
  }
  return strict(n, std::move(data));
}

StochasticMatrix StochasticMatrix::identity(std::size_t n) {
  std::vector<double> d(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) d[i * n + i] = 1.0;
  return strict(n, std::move(d));
}

ProbDist StochasticMatrix::row_dist(State a) const {
  auto r = row(a);
  return ProbDist::strict(std::vector<double>(r.begin(), r.end()));
}

// Arithmetic

ProbDist apply(const ProbDist& dist, const StochasticMatrix& matrix) {
  const std::size_t n = matrix.size();
  if (dist.size() != n) {
    throw ValidationError(kModule, "apply: distribution has " + std::to_string(dist.size()) +
                                       " states, matrix has " + std::to_string(n));
  }
  std::vector<double> out(n, 0.0);
  for (State a = 0; a < n; ++a) {
    const double mass = dist[a];
    if (mass == 0.0) continue;
    auto r = matrix.row(a);
    for (std::size_t b = 0; b < n; ++b) out[b] += mass * r[b];
  }
  return ProbDist::strict(std::move(out));
}

double tv_distance(const ProbDist& p, const ProbDist& q) {
  if (p.size() != q.size()) {
    throw ValidationError(kModule, "tv_distance: dimension mismatch (" +
                                       std::to_string(p.size()) + " vs " +
                                       std::to_string(q.size()) + ")");
  }
  double s = 0.0;
  for (State a = 0; a < p.size(); ++a) s += std::abs(p[a] - q[a]);
  return std::min(1.0, 0.5 * s);
}

double max_abs_diff(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError(kModule, "max_abs_diff: dimension mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i] - y[i]));
  return m;
}

double max_abs_diff(const StochasticMatrix& x, const StochasticMatrix& y) {
  return max_abs_diff(x.data(), y.data());
}

StochasticMatrix multiply(const StochasticMatrix& x, const StochasticMatrix& y) {
  const std::size_t n = x.size();
  if (y.size() != n) throw ValidationError(kModule, "multiply: dimension mismatch");
  std::vector<double> out(n * n, 0.0);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t c = 0; c < n; ++c) {
      const double xac = x(a, c);
      if (xac == 0.0) continue;
      for (std::size_t b = 0; b < n; ++b) out[a * n + b] += xac * y(c, b);
    }
  }
  return StochasticMatrix::strict(n, std::move(out));
}

StochasticMatrix power(const StochasticMatrix& p, unsigned k) {
  StochasticMatrix result = StochasticMatrix::identity(p.size());
  StochasticMatrix base = p;
  while (k > 0) {
    if (k & 1u) result = multiply(result, base);
    k >>= 1u;
    if (k > 0) base = multiply(base, base);
  }
  return result;
}

// MatrixSchedule

MatrixSchedule::MatrixSchedule(std::vector<StochasticMatrix> m, std::vector<RowFlags> f, bool h)
    : matrices_(std::move(m)), flagged_(std::move(f)), homogeneous_(h) {
  if (matrices_.empty()) throw ValidationError(kModule, "schedule must hold at least one matrix");
  const std::size_t n = matrices_.front().size();
  for (const auto& m2 : matrices_) {
    if (m2.size() != n) throw ValidationError(kModule, "schedule matrices differ in dimension");
  }
  if (flagged_.empty()) flagged_.assign(matrices_.size(), RowFlags(n, false));
  if (flagged_.size() != matrices_.size()) {
    throw ValidationError(kModule, "schedule flags do not match the number of matrices");
  }
  for (auto& f2 : flagged_) {
    if (f2.empty()) f2.assign(n, false);
    if (f2.size() != n) throw ValidationError(kModule, "schedule row flags have wrong length");
  }
}

MatrixSchedule MatrixSchedule::homogeneous(StochasticMatrix p, RowFlags flagged) {
  std::vector<RowFlags> f;
  f.push_back(std::move(flagged));
  return MatrixSchedule({std::move(p)}, std::move(f), true);
}

MatrixSchedule MatrixSchedule::time_varying(std::vector<StochasticMatrix> slices,
                                            std::vector<RowFlags> flagged) {
  return MatrixSchedule(std::move(slices), std::move(flagged), false);
}

const StochasticMatrix& MatrixSchedule::at(std::size_t t) const {
  if (homogeneous_) return matrices_.front();
  if (t >= matrices_.size()) {
    throw ValidationError(kModule, "schedule has no matrix for time " + std::to_string(t) +
                                       " (length " + std::to_string(matrices_.size()) + ")");
  }
  return matrices_[t];
}

const RowFlags& MatrixSchedule::flagged(std::size_t t) const {
  if (homogeneous_) return flagged_.front();
  if (t >= flagged_.size()) {
    throw ValidationError(kModule, "schedule has no matrix for time " + std::to_string(t));
  }
  return flagged_[t];
}

void validate_trajectory(const Trajectory& traj, std::size_t n, std::string_view module) {
  if (traj.states.empty()) throw ValidationError(module, "trajectory is empty");
  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    if (traj.states[i] >= n) {
      throw ValidationError(module, "state " + std::to_string(traj.states[i]) + " at position " +
                                        std::to_string(i) + " is outside [0, " +
                                        std::to_string(n) + ")");
    }
  }
}

}  // namespace emclab
