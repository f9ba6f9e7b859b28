#include "emclab/censoring.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <thread>

#include "emclab/analysis.hpp"
#include "emclab/emc_chain.hpp"
#include "emclab/errors.hpp"

namespace emclab {
namespace {

constexpr std::string_view kModule = "censoring";
constexpr double kIllConditioned = 1e8;
constexpr double kSingularRatio = 1e-13;

// Largest horizon <= wanted whose enumeration fits the cap (at least 1).
std::size_t fitting_horizon(std::size_t n, std::size_t wanted, std::size_t cap) {
  std::size_t h = std::max<std::size_t>(wanted, 1);
  while (h > 1) {
    try {
      enumeration_size(n, h, cap, kModule);
      return h;
    } catch (const SizeError&) {
      --h;
    }
  }
  enumeration_size(n, 1, cap, kModule);
  return 1;
}

}  // namespace

CensorSet::CensorSet(std::vector<State> members, std::size_t n) : in_(n, false) {
  if (members.empty()) throw ValidationError(kModule, "censor set must be nonempty");
  for (State s : members) {
    if (s >= n) {
      throw ValidationError(kModule, "censor set member " + std::to_string(s) +
                                         " outside [0, " + std::to_string(n) + ")");
    }
    if (in_[s]) throw ValidationError(kModule, "censor set lists state " + std::to_string(s) + " twice");
    in_[s] = true;
  }
  for (State s = 0; s < n; ++s) {
    if (in_[s]) {
      members_.push_back(s);
    } else {
      complement_.push_back(s);
    }
  }
}

CensorSet CensorSet::from_labels(const std::vector<std::string>& labels, const StateSpace& space) {
  std::vector<State> members;
  for (const auto& l : labels) members.push_back(space.index_of(l));
  return CensorSet(std::move(members), space.size());
}

HitSequence a_hits(const Trajectory& traj, const CensorSet& a) {
  HitSequence hits;
  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    if (a.contains(traj.states[i])) {
      hits.times.push_back(traj.origin + i);
      hits.states.push_back(traj.states[i]);
    }
  }
  return hits;
}

ProbDist conditional_on(const ProbDist& pi, const CensorSet& a) {
  if (pi.size() != a.num_states()) {
    throw ValidationError(kModule, "conditional_on: distribution and censor set dimensions differ");
  }
  double mass = 0.0;
  for (State s : a.members()) mass += pi[s];
  if (!(mass > 0.0)) throw ValidationError(kModule, "conditional_on: pi(A) = 0");
  std::vector<double> w(pi.size(), 0.0);
  for (State s : a.members()) w[s] = pi[s] / mass;
  return ProbDist::strict(std::move(w));
}

CensoredMatrix censored_matrix(const StochasticMatrix& p, const CensorSet& a) {
  if (p.size() != a.num_states()) {
    throw ValidationError(kModule, "censored_matrix: matrix and censor set dimensions differ");
  }
  const auto& in = a.members();
  const auto& out = a.complement();
  if (out.empty()) return {p, in, 1.0, false};

  const auto na = static_cast<Eigen::Index>(in.size());
  const auto nb = static_cast<Eigen::Index>(out.size());
  Eigen::MatrixXd paa(na, na), pab(na, nb), pba(nb, na), m(nb, nb);
  for (Eigen::Index i = 0; i < na; ++i) {
    for (Eigen::Index j = 0; j < na; ++j) paa(i, j) = p(in[i], in[j]);
    for (Eigen::Index j = 0; j < nb; ++j) pab(i, j) = p(in[i], out[j]);
  }
  for (Eigen::Index i = 0; i < nb; ++i) {
    for (Eigen::Index j = 0; j < na; ++j) pba(i, j) = p(out[i], in[j]);
    for (Eigen::Index j = 0; j < nb; ++j) m(i, j) = (i == j ? 1.0 : 0.0) - p(out[i], out[j]);
  }

  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& sv = svd.singularValues();
  const double smax = sv(0);
  const double smin = sv(sv.size() - 1);
  if (!(smin > kSingularRatio * smax)) {
    throw StructuralError(kModule, "censored_matrix: I - P_BB is singular; the chain can stay "
                                   "outside A forever (absorbing complement)");
  }
  const double condition = smax / smin;

  const Eigen::MatrixXd x = m.fullPivLu().solve(pba);
  const Eigen::MatrixXd c = paa + pab * x;
  std::vector<double> rows(static_cast<std::size_t>(na * na));
  for (Eigen::Index i = 0; i < na; ++i) {
    double total = 0.0;
    for (Eigen::Index j = 0; j < na; ++j) total += std::max(0.0, c(i, j));
    for (Eigen::Index j = 0; j < na; ++j) {
      rows[static_cast<std::size_t>(i * na + j)] = std::max(0.0, c(i, j)) / total;
    }
    if (std::abs(total - 1.0) > kSumTolerance) {
      throw StructuralError(kModule, "censored_matrix: row " + std::to_string(in[i]) +
                                         " loses mass (" + std::to_string(total) +
                                         "); the chain does not return to A surely");
    }
  }
  return {StochasticMatrix::strict(in.size(), std::move(rows)), in, condition,
          condition > kIllConditioned};
}

ProbDist restrict_to(const ProbDist& dist, const CensorSet& a) {
  if (dist.size() != a.num_states()) throw ValidationError(kModule, "restrict_to: dimension mismatch");
  std::vector<double> w;
  for (State s : a.members()) w.push_back(dist[s]);
  for (State s : a.complement()) {
    if (dist[s] > kSumTolerance) {
      throw ValidationError(kModule, "restrict_to: distribution has mass outside A at state " +
                                         std::to_string(s));
    }
  }
  return ProbDist::normalize(w);
}

ProbDist embed(const ProbDist& dist_on_a, const CensorSet& a) {
  if (dist_on_a.size() != a.members().size()) throw ValidationError(kModule, "embed: dimension mismatch");
  std::vector<double> w(a.num_states(), 0.0);
  for (std::size_t i = 0; i < a.members().size(); ++i) w[a.members()[i]] = dist_on_a[static_cast<State>(i)];
  return ProbDist::strict(std::move(w));
}

std::vector<ProbDist> exact_hit_distributions(const StochasticMatrix& p, const CensorSet& a,
                                              const ProbDist& initial, std::size_t count) {
  const CensoredMatrix c = censored_matrix(p, a);
  ProbDist cur = restrict_to(initial, a);
  std::vector<ProbDist> out;
  for (std::size_t k = 0; k < count; ++k) {
    if (k > 0) cur = apply(cur, c.matrix);
    out.push_back(embed(cur, a));
  }
  return out;
}

HitReport a_hit_distribution_check(const ProcessModel& parent, const CensorSet& a,
                                   const HitCheckOptions& options) {
  const std::size_t n = parent.size();
  if (a.num_states() != n) throw ValidationError(kModule, "censor set dimension differs from model");
  if (options.hits == 0 || options.samples == 0) {
    throw ValidationError(kModule, "hit check needs hits >= 1 and samples >= 1");
  }

  const std::size_t h = fitting_horizon(n, options.oracle_horizon, options.cap);
  const EmcChain emc = build_emc(parent, h, options.cap);
  if (!emc.schedule.is_homogeneous()) {
    throw StructuralError(kModule, "hit check: the parent's exact first-order schedule is not "
                                   "homogeneous");
  }
  const StochasticMatrix& p = emc.schedule.at(0);
  const StructureReport rep = structure(p);
  if (!rep.irreducible || !rep.aperiodic) {
    throw StructuralError(kModule, "hit check: first-order matrix must be irreducible and aperiodic");
  }
  const ProbDist pi = stationary(p);
  double mass = 0.0;
  for (State s : a.members()) mass += pi[s];
  if (!(mass > 0.0)) throw StructuralError(kModule, "hit check: pi(A) = 0");
  const ProbDist pi_a = conditional_on(pi, a);
  const ProcessModel started = parent.with_initial(pi_a);

  const std::size_t m = options.hits;
  const std::size_t horizon0 = 20 * m * n;
  const std::size_t count = options.samples;

  // counts[k * n + s]: trajectories whose k-th hit is s.
  struct Partial {
    std::vector<std::uint64_t> counts;
    std::size_t accepted = 0;
    std::size_t rejected = 0;
  };
  auto work = [&](std::size_t begin, std::size_t end) {
    Partial part{std::vector<std::uint64_t>(m * n, 0), 0, 0};
    for (std::size_t i = begin; i < end; ++i) {
      const std::uint64_t seed = derive_seed(options.seed, i);
      std::size_t horizon = horizon0;
      HitSequence hits = a_hits(sample_trajectory(started, horizon, seed), a);
      for (std::size_t r = 0; r < options.max_retries && hits.size() < m; ++r) {
        horizon *= 2;
        hits = a_hits(sample_trajectory(started, horizon, seed), a);
      }
      if (hits.size() < m) {
        ++part.rejected;
        continue;
      }
      ++part.accepted;
      for (std::size_t k = 0; k < m; ++k) ++part.counts[k * n + hits.states[k]];
    }
    return part;
  };

  const unsigned threads = std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(count)));
  std::vector<Partial> parts(threads);
  if (threads == 1) {
    parts[0] = work(0, count);
  } else {
    const std::size_t chunk = (count + threads - 1) / threads;
    std::vector<std::jthread> pool;
    for (unsigned k = 0; k < threads; ++k) {
      const std::size_t b = std::min(count, k * chunk);
      const std::size_t e = std::min(count, b + chunk);
      pool.emplace_back([&, k, b, e] { parts[k] = work(b, e); });
    }
  }
  Partial total{std::vector<std::uint64_t>(m * n, 0), 0, 0};
  for (const auto& part : parts) {
    if (part.counts.empty()) continue;
    for (std::size_t i = 0; i < total.counts.size(); ++i) total.counts[i] += part.counts[i];
    total.accepted += part.accepted;
    total.rejected += part.rejected;
  }

  HitReport out{a.members(), pi, pi_a, {}, total.rejected, horizon0,
                3.0 * std::sqrt(static_cast<double>(n) / (2.0 * static_cast<double>(count))) + 0.005,
                0.0, false, parent.is_markov(), ""};
  std::vector<ProbDist> exact;
  if (out.markov_parent) {
    exact = exact_hit_distributions(p, a, pi_a, m);
    out.note = "Markov parent: exact censored-chain propagation included";
  } else {
    out.note = "non-Markov parent: statistical check of one-dimensional hit laws only";
  }
  if (total.accepted == 0) {
    throw VerificationError(kModule, "hit check: every trajectory was rejected for lack of hits");
  }
  for (std::size_t k = 0; k < m; ++k) {
    std::vector<double> w(n);
    for (std::size_t s = 0; s < n; ++s) w[s] = static_cast<double>(total.counts[k * n + s]);
    const ProbDist emp = ProbDist::normalize(w);
    HitRow row{k, tv_distance(emp, pi_a), total.accepted, std::nullopt};
    if (!exact.empty()) row.exact_tv = tv_distance(exact[k], pi_a);
    out.max_tv = std::max(out.max_tv, row.tv);
    out.per_hit.push_back(row);
  }
  out.passed = out.max_tv <= out.tolerance;
  return out;
}

}  // namespace emclab
