#include "emclab/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "emclab/errors.hpp"
#include "emclab/io.hpp"

namespace emclab {
namespace {

constexpr std::string_view kModule = "exact-oracle";

std::size_t pow_n(std::size_t n, std::size_t e) {
  std::size_t r = 1;
  for (std::size_t i = 0; i < e; ++i) r *= n;
  return r;
}

void enumerate(const ProcessModel& model, std::vector<State>& prefix, double mass,
               std::size_t code, std::size_t length, std::vector<double>& out,
               std::vector<std::vector<double>>& cond) {
  if (prefix.size() == length) {
    out[code] = mass;
    return;
  }
  const std::size_t n = model.size();
  const ProbDist next = model.conditional_next(prefix);
  auto& slot = cond[prefix.size() - 1];
  for (State b = 0; b < n; ++b) slot[code * n + b] = next[b];
  for (State b = 0; b < n; ++b) {
    const double p = mass * next[b];
    if (p == 0.0) continue;
    prefix.push_back(b);
    enumerate(model, prefix, p, code * n + b, length, out, cond);
    prefix.pop_back();
  }
}

}  // namespace

std::size_t enumeration_size(std::size_t n, std::size_t horizon, std::size_t cap,
                             std::string_view module) {
  std::size_t size = 1;
  bool overflow = false;
  for (std::size_t i = 0; i <= horizon; ++i) {
    if (size > std::numeric_limits<std::size_t>::max() / n) {
      overflow = true;
      break;
    }
    size *= n;
  }
  if (overflow || size > cap) {
    std::string count = overflow ? std::to_string(n) + "^" + std::to_string(horizon + 1)
                                 : std::to_string(size);
    throw SizeError(module, "enumeration needs n^(T+1) = " + count + " entries, cap is " +
                                std::to_string(cap) +
                                "; lower the horizon, raise the cap, or use the sampled path");
  }
  return size;
}

JointTable::JointTable(std::size_t num_states, std::size_t horizon, std::vector<double> probs)
    : n_(num_states), horizon_(horizon), probs_(std::move(probs)) {
  if (probs_.size() != pow_n(n_, horizon_ + 1)) {
    throw ValidationError(kModule, "joint table size does not match n^(T+1)");
  }
  double total = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0)) throw ValidationError(kModule, "joint table has a negative probability");
    total += p;
  }
  if (std::abs(total - 1.0) > kSumTolerance) {
    throw ValidationError(kModule, "joint table mass is " + format_double(total));
  }
}

JointTable::JointTable(std::size_t num_states, std::size_t horizon, std::vector<double> probs,
                       std::vector<std::vector<double>> conditionals)
    : JointTable(num_states, horizon, std::move(probs)) {
  if (conditionals.size() != horizon_) {
    throw ValidationError(kModule, "joint table needs one conditional block per t < T");
  }
  for (std::size_t t = 0; t < horizon_; ++t) {
    if (conditionals[t].size() != pow_n(n_, t + 2)) {
      throw ValidationError(kModule, "conditional block " + std::to_string(t) + " has the wrong size");
    }
  }
  conditionals_ = std::move(conditionals);
}

double JointTable::conditional(std::size_t t, std::size_t h, State b, std::span<const double> law,
                               double mass) const {
  if (!conditionals_.empty()) return conditionals_[t][h * n_ + b];
  return law[h * n_ + b] / mass;
}

double JointTable::probability(std::span<const State> trajectory) const {
  if (trajectory.size() != horizon_ + 1) {
    throw ValidationError(kModule, "trajectory length must be horizon + 1");
  }
  std::size_t code = 0;
  for (State s : trajectory) {
    if (s >= n_) throw ValidationError(kModule, "state out of range");
    code = code * n_ + s;
  }
  return probs_[code];
}

std::vector<double> JointTable::prefix_law(std::size_t len) const {
  if (len == 0 || len > horizon_ + 1) {
    throw ValidationError(kModule, "prefix length " + std::to_string(len) + " out of range");
  }
  const std::size_t stride = pow_n(n_, horizon_ + 1 - len);
  std::vector<double> out(probs_.size() / stride, 0.0);
  for (std::size_t code = 0; code < probs_.size(); ++code) out[code / stride] += probs_[code];
  return out;
}

std::vector<State> JointTable::decode(std::size_t code) const {
  std::vector<State> states(horizon_ + 1);
  for (std::size_t i = horizon_ + 1; i > 0; --i, code /= n_) {
    states[i - 1] = static_cast<State>(code % n_);
  }
  return states;
}

JointTable joint_table(const ProcessModel& model, std::size_t horizon, std::size_t cap) {
  const std::size_t n = model.size();
  const std::size_t size = enumeration_size(n, horizon, cap, kModule);
  std::vector<double> probs(size, 0.0);
  std::vector<std::vector<double>> cond(horizon);
  for (std::size_t t = 0; t < horizon; ++t) cond[t].assign(pow_n(n, t + 2), 0.0);
  std::vector<State> prefix;
  prefix.reserve(horizon + 1);
  const ProbDist& init = model.initial();
  for (State a = 0; a < n; ++a) {
    if (init[a] == 0.0) continue;
    prefix.assign(1, a);
    enumerate(model, prefix, init[a], a, horizon + 1, probs, cond);
  }
  return JointTable(n, horizon, std::move(probs), std::move(cond));
}

ProbDist marginal(const JointTable& joint, std::size_t t) {
  if (t > joint.horizon()) {
    throw ValidationError(kModule, "marginal: t = " + std::to_string(t) + " exceeds horizon " +
                                       std::to_string(joint.horizon()));
  }
  const std::size_t n = joint.num_states();
  const std::size_t stride = pow_n(n, joint.horizon() - t);
  std::vector<double> w(n, 0.0);
  auto probs = joint.probabilities();
  for (std::size_t code = 0; code < probs.size(); ++code) w[(code / stride) % n] += probs[code];
  return ProbDist::strict(std::move(w));
}

FirstOrderMatrix first_order_matrix(const JointTable& joint, std::size_t t) {
  if (t >= joint.horizon()) {
    throw ValidationError(kModule, "first_order_matrix: t = " + std::to_string(t) +
                                       " must be below the horizon " +
                                       std::to_string(joint.horizon()));
  }
  const std::size_t n = joint.num_states();
  const std::size_t stride = pow_n(n, joint.horizon() - t - 1);
  std::vector<double> pair(n * n, 0.0);
  auto probs = joint.probabilities();
  for (std::size_t code = 0; code < probs.size(); ++code) {
    pair[(code / stride) % (n * n)] += probs[code];
  }
  std::vector<double> rows(n * n);
  RowFlags flagged(n, false);
  for (std::size_t a = 0; a < n; ++a) {
    double mass = 0.0;
    for (std::size_t b = 0; b < n; ++b) mass += pair[a * n + b];
    if (mass > 0.0) {
      for (std::size_t b = 0; b < n; ++b) rows[a * n + b] = pair[a * n + b] / mass;
    } else {
      flagged[a] = true;
      for (std::size_t b = 0; b < n; ++b) rows[a * n + b] = 1.0 / static_cast<double>(n);
    }
  }
  return {StochasticMatrix::strict(n, std::move(rows)), std::move(flagged)};
}

HistoryGap history_gap(const JointTable& joint, std::size_t t) {
  const std::size_t n = joint.num_states();
  const FirstOrderMatrix p = first_order_matrix(joint, t);
  const std::vector<double> law = joint.prefix_law(t + 2);  // (X_0..X_{t+1})
  const std::size_t histories = law.size() / n;
  std::vector<double> mass(histories, 0.0);
  for (std::size_t h = 0; h < histories; ++h) {
    for (std::size_t b = 0; b < n; ++b) mass[h] += law[h * n + b];
  }
  auto live = [&](std::size_t h) { return mass[h] > kHistoryMassFloor; };
  auto cond = [&](std::size_t h, State b) { return joint.conditional(t, h, b, law, mass[h]); };

  // p_t(a, b) is a convex combination of the conditionals of histories ending
  // in a, so it is compared after clamping into their range; identical
  // conditionals then give a gap of exactly 0.
  std::vector<double> lo(n * n, 1.0), hi(n * n, 0.0);
  for (std::size_t h = 0; h < histories; ++h) {
    if (!live(h)) continue;
    const std::size_t a = h % n;
    for (State b = 0; b < n; ++b) {
      lo[a * n + b] = std::min(lo[a * n + b], cond(h, b));
      hi[a * n + b] = std::max(hi[a * n + b], cond(h, b));
    }
  }

  HistoryGap out;
  out.time = t;
  std::size_t best_code = 0;
  bool found = false;
  for (std::size_t h = 0; h < histories; ++h) {
    if (!live(h)) continue;
    const State last = static_cast<State>(h % n);
    for (State b = 0; b < n; ++b) {
      const double c = cond(h, b);
      const double ref = std::clamp(p.matrix(last, b), lo[last * n + b], hi[last * n + b]);
      const double dev = std::abs(c - ref);
      if (!found || dev > out.gap) {
        found = true;
        out.gap = dev;
        best_code = h;
        out.next_state = b;
        out.witness_conditional = c;
        out.first_order = p.matrix(last, b);
      }
    }
  }
  if (!found) return out;

  auto decode = [&](std::size_t code) {
    std::vector<State> s(t + 1);
    for (std::size_t i = t + 1; i > 0; --i, code /= n) s[i - 1] = static_cast<State>(code % n);
    return s;
  };
  out.witness = decode(best_code);

  // Contrast: same last state, conditional on the other side of p_t(a, b).
  const State last = out.witness.back();
  const bool above = out.witness_conditional >= out.first_order;
  bool have_contrast = false;
  for (std::size_t h = 0; h < histories; ++h) {
    if (h % n != last || !live(h)) continue;
    const double c = cond(h, out.next_state);
    if (!have_contrast || (above ? c < out.contrast_conditional : c > out.contrast_conditional)) {
      have_contrast = true;
      out.contrast = decode(h);
      out.contrast_conditional = c;
    }
  }
  return out;
}

double trajectory_sum(const ProbDist& initial, const MatrixSchedule& schedule, std::size_t t,
                      State a, std::size_t cap) {
  const std::size_t n = initial.size();
  if (schedule.size() != n) throw ValidationError(kModule, "trajectory_sum: dimension mismatch");
  if (a >= n) throw ValidationError(kModule, "trajectory_sum: target state out of range");
  if (!schedule.covers(t)) {
    throw ValidationError(kModule, "trajectory_sum: schedule does not provide P_0..P_" +
                                       std::to_string(t == 0 ? 0 : t - 1));
  }
  enumeration_size(n, t, cap, kModule);
  if (t == 0) return initial[a];

  // Odometer over (a_0, ..., a_{t-1}); every path is multiplied out in full.
  std::vector<State> path(t + 1, 0);
  path[t] = a;
  double total = 0.0;
  while (true) {
    double term = initial[path[0]];
    for (std::size_t i = 0; i < t && term != 0.0; ++i) {
      term *= schedule.at(i)(path[i], path[i + 1]);
    }
    total += term;
    std::size_t pos = t;
    while (pos > 0) {
      --pos;
      if (++path[pos] < n) break;
      path[pos] = 0;
      if (pos == 0) return total;
    }
  }
}

std::string joint_table_csv(const JointTable& joint, const StateSpace* labels) {
  std::string out;
  for (std::size_t i = 0; i <= joint.horizon(); ++i) out += "a_" + std::to_string(i) + ",";
  out += "probability\n";
  auto probs = joint.probabilities();
  for (std::size_t code = 0; code < probs.size(); ++code) {
    if (probs[code] == 0.0) continue;
    for (State s : joint.decode(code)) {
      out += labels ? labels->label(s) : std::to_string(s);
      out += ',';
    }
    out += format_double(probs[code]);
    out += '\n';
  }
  return out;
}

}  // namespace emclab
