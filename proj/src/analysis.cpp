#include "emclab/analysis.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

#include "emclab/emc_chain.hpp"
#include "emclab/errors.hpp"
#include "emclab/io.hpp"

namespace emclab {
namespace {

constexpr std::string_view kModule = "chain-analysis";

using Adjacency = std::vector<std::vector<bool>>;

Adjacency positive_pattern(const StochasticMatrix& p) {
  const std::size_t n = p.size();
  Adjacency adj(n, std::vector<bool>(n, false));
  for (State a = 0; a < n; ++a) {
    for (State b = 0; b < n; ++b) adj[a][b] = p(a, b) > kPositiveThreshold;
  }
  return adj;
}

// reach[a][b]: b reachable from a in one or more steps.
Adjacency reachability(const Adjacency& adj) {
  const std::size_t n = adj.size();
  Adjacency reach(n, std::vector<bool>(n, false));
  for (std::size_t a = 0; a < n; ++a) {
    std::deque<std::size_t> queue;
    for (std::size_t b = 0; b < n; ++b) {
      if (adj[a][b]) {
        reach[a][b] = true;
        queue.push_back(b);
      }
    }
    while (!queue.empty()) {
      const std::size_t u = queue.front();
      queue.pop_front();
      for (std::size_t v = 0; v < n; ++v) {
        if (adj[u][v] && !reach[a][v]) {
          reach[a][v] = true;
          queue.push_back(v);
        }
      }
    }
  }
  return reach;
}

std::string describe_classes(const std::vector<std::vector<State>>& classes) {
  std::string s;
  for (const auto& c : classes) {
    if (!s.empty()) s += ", ";
    s += "{";
    for (std::size_t i = 0; i < c.size(); ++i) s += (i ? "," : "") + std::to_string(c[i]);
    s += "}";
  }
  return s;
}

void require_irreducible(const StructureReport& rep, std::string_view what) {
  if (!rep.irreducible) {
    throw StructuralError(kModule, std::string(what) + ": matrix is reducible; closed classes " +
                                       describe_classes(rep.closed_classes));
  }
}

}  // namespace

StructureReport structure(const StochasticMatrix& p) {
  const std::size_t n = p.size();
  const Adjacency adj = positive_pattern(p);
  const Adjacency reach = reachability(adj);
  StructureReport rep;

  std::vector<int> class_of(n, -1);
  for (State a = 0; a < n; ++a) {
    if (class_of[a] >= 0) continue;
    std::vector<State> members{a};
    class_of[a] = static_cast<int>(rep.classes.size());
    for (State b = a + 1; b < n; ++b) {
      if (reach[a][b] && reach[b][a]) {
        members.push_back(b);
        class_of[b] = class_of[a];
      }
    }
    rep.classes.push_back(std::move(members));
  }
  for (const auto& c : rep.classes) {
    bool closed = true;
    for (State u : c) {
      for (State v = 0; v < n; ++v) {
        if (adj[u][v] && class_of[v] != class_of[u]) closed = false;
      }
    }
    if (closed) rep.closed_classes.push_back(c);
  }
  rep.irreducible = rep.classes.size() == 1;

  // Period of each state: BFS levels inside its class, gcd of level
  // discrepancies over the class's internal edges.
  rep.periods.assign(n, 0);
  for (const auto& c : rep.classes) {
    const State root = c.front();
    if (!reach[root][root]) continue;  // no closed walk; period stays 0
    std::vector<long> level(n, -1);
    level[root] = 0;
    std::deque<State> queue{root};
    while (!queue.empty()) {
      const State u = queue.front();
      queue.pop_front();
      for (State v : c) {
        if (adj[u][v] && level[v] < 0) {
          level[v] = level[u] + 1;
          queue.push_back(v);
        }
      }
    }
    long g = 0;
    for (State u : c) {
      for (State v : c) {
        if (adj[u][v]) g = std::gcd(g, std::abs(level[u] + 1 - level[v]));
      }
    }
    for (State u : c) rep.periods[u] = static_cast<unsigned>(g);
  }
  rep.aperiodic = std::all_of(rep.periods.begin(), rep.periods.end(),
                              [](unsigned d) { return d == 1; });

  if (rep.irreducible && rep.aperiodic) {
    const unsigned bound = static_cast<unsigned>((n - 1) * (n - 1) + 1);
    Adjacency power = adj;
    for (unsigned k = 1; k <= bound; ++k) {
      bool all = true;
      for (const auto& row : power) {
        if (std::find(row.begin(), row.end(), false) != row.end()) all = false;
      }
      if (all) {
        rep.certificate = k;
        break;
      }
      Adjacency next(n, std::vector<bool>(n, false));
      for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t c = 0; c < n; ++c) {
          if (!power[a][c]) continue;
          for (std::size_t b = 0; b < n; ++b) {
            if (adj[c][b]) next[a][b] = true;
          }
        }
      }
      power = std::move(next);
    }
  }
  return rep;
}

ProbDist power_iteration(const StochasticMatrix& p, const ProbDist& start, double tol,
                         std::size_t max_iterations, std::size_t* iterations) {
  ProbDist cur = start;
  std::size_t it = 0;
  while (it < max_iterations) {
    ProbDist next = apply(cur, p);
    ++it;
    const double change = tv_distance(next, cur);
    cur = std::move(next);
    if (change <= tol) break;
  }
  if (iterations) *iterations = it;
  return cur;
}

StationaryResult stationary_detailed(const StochasticMatrix& p) {
  const StructureReport rep = structure(p);
  require_irreducible(rep, "stationary");
  const auto n = static_cast<Eigen::Index>(p.size());

  // (P^T - I) pi = 0 with the last equation replaced by sum(pi) = 1.
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      a(i, j) = p(static_cast<State>(j), static_cast<State>(i)) - (i == j ? 1.0 : 0.0);
    }
  }
  a.row(n - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs(n - 1) = 1.0;
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  Eigen::VectorXd x = lu.solve(rhs);
  for (int refine = 0; refine < 2; ++refine) x += lu.solve(rhs - a * x);

  std::vector<double> w(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) w[static_cast<std::size_t>(i)] = std::max(0.0, x(i));
  ProbDist pi = ProbDist::normalize(w);

  const ProbDist moved = apply(pi, p);
  StationaryResult out{pi, max_abs_diff(pi.weights(), moved.weights()), false, 0.0, 0};
  if (rep.aperiodic) {
    const ProbDist power = power_iteration(p, ProbDist::uniform(p.size()), 1e-13, 10000,
                                           &out.power_iterations);
    out.power_checked = true;
    out.power_agreement = tv_distance(power, pi);
  }
  return out;
}

ProbDist stationary(const StochasticMatrix& p) { return stationary_detailed(p).pi; }

ConvergenceProfile convergence_profile(const ProbDist& initial, const StochasticMatrix& p,
                                       std::size_t t_max) {
  const StructureReport rep = structure(p);
  require_irreducible(rep, "convergence_profile");
  if (!rep.aperiodic) {
    throw StructuralError(kModule, "convergence_profile: matrix is periodic (period " +
                                       std::to_string(rep.periods.front()) +
                                       "); convergence needs an aperiodic chain");
  }
  ProbDist pi = stationary(p);
  ConvergenceProfile prof{{}, pi, kErgodicLimitThreshold, false};
  ProbDist cur = initial;
  for (std::size_t t = 0; t <= t_max; ++t) {
    if (t > 0) cur = apply(cur, p);
    prof.rows.emplace_back(t, tv_distance(cur, pi));
  }
  prof.limit_reached = prof.rows.back().second <= prof.limit_threshold;
  return prof;
}

std::string profile_csv(const ConvergenceProfile& profile) {
  std::string out = "t,tv\n";
  for (const auto& [t, tv] : profile.rows) {
    out += std::to_string(t) + "," + format_double(tv) + "\n";
  }
  return out;
}

Theorem1Check theorem1_identity_check(const ProcessModel& parent, std::size_t horizon,
                                      std::size_t cap) {
  const JointTable joint = joint_table(parent, horizon, cap);
  const EmcChain emc = build_emc(joint, parent.initial());
  if (!emc.schedule.is_homogeneous()) {
    throw StructuralError(kModule, "theorem1: exact first-order schedule is not homogeneous over "
                                   "t < " + std::to_string(horizon));
  }
  const StochasticMatrix& p = emc.schedule.at(0);
  const StructureReport rep = structure(p);
  require_irreducible(rep, "theorem1");
  if (!rep.aperiodic) throw StructuralError(kModule, "theorem1: matrix is periodic");

  // Parent and chain share P, hence the stationary law pi = pi~.
  const ProbDist pi = stationary(p);
  const Propagation prop = propagate_all(emc, horizon);

  double dev = 0.0;
  for (std::size_t t = 0; t <= horizon; ++t) {
    const ProbDist exact = marginal(joint, t);
    for (State a = 0; a < p.size(); ++a) {
      const double lhs = exact[a] - pi[a];
      const double rhs = prop.marginals[t][a] - pi[a];
      dev = std::max(dev, std::abs(lhs - rhs));
    }
  }
  return Theorem1Check{horizon, dev, 1e-9, dev <= 1e-9, pi, p};
}

}  // namespace emclab
