#include "emclab/emc_chain.hpp"

#include <algorithm>
#include <cmath>

#include "emclab/errors.hpp"

namespace emclab {
namespace {

constexpr std::string_view kModule = "emc-builder";

// Estimation-path seed, kept apart from the seed that draws the marginals.
constexpr std::uint64_t kEstimationSalt = 0xE57A7E5EEDULL;

bool slices_agree(const StochasticMatrix& x, const RowFlags& fx, const StochasticMatrix& y,
                  const RowFlags& fy) {
  const std::size_t n = x.size();
  for (State a = 0; a < n; ++a) {
    if (fx[a] || fy[a]) continue;
    for (State b = 0; b < n; ++b) {
      if (std::abs(x(a, b) - y(a, b)) > kHomogeneityTolerance) return false;
    }
  }
  return true;
}

// One matrix per slice, or a single one when all unflagged rows agree. The
// collapsed matrix takes each row from the first slice where it is not
// flagged.
MatrixSchedule collapse(std::vector<StochasticMatrix> slices, std::vector<RowFlags> flags) {
  const std::size_t n = slices.front().size();
  bool same = true;
  for (std::size_t i = 1; i < slices.size() && same; ++i) {
    same = slices_agree(slices[0], flags[0], slices[i], flags[i]);
  }
  if (!same) return MatrixSchedule::time_varying(std::move(slices), std::move(flags));
  std::vector<double> rows(n * n);
  RowFlags merged(n, true);
  for (State a = 0; a < n; ++a) {
    std::size_t src = 0;
    for (std::size_t i = 0; i < slices.size(); ++i) {
      if (!flags[i][a]) {
        src = i;
        merged[a] = false;
        break;
      }
    }
    auto r = slices[src].row(a);
    std::copy(r.begin(), r.end(), rows.begin() + static_cast<std::ptrdiff_t>(a * n));
  }
  return MatrixSchedule::homogeneous(StochasticMatrix::strict(n, std::move(rows)),
                                     std::move(merged));
}

struct CountedMatrix {
  StochasticMatrix matrix;
  RowFlags flagged;
};

CountedMatrix normalize_counts(const std::vector<std::uint64_t>& counts, std::size_t n,
                               double smoothing) {
  if (smoothing < 0.0 || !std::isfinite(smoothing)) {
    throw ValidationError(kModule, "smoothing must be finite and >= 0");
  }
  std::vector<double> rows(n * n);
  RowFlags flagged(n, false);
  for (std::size_t a = 0; a < n; ++a) {
    std::uint64_t total = 0;
    for (std::size_t b = 0; b < n; ++b) total += counts[a * n + b];
    flagged[a] = total == 0;
    const double denom = static_cast<double>(total) + smoothing * static_cast<double>(n);
    for (std::size_t b = 0; b < n; ++b) {
      rows[a * n + b] = denom > 0.0
                            ? (static_cast<double>(counts[a * n + b]) + smoothing) / denom
                            : 1.0 / static_cast<double>(n);
    }
  }
  return {StochasticMatrix::strict(n, std::move(rows)), std::move(flagged)};
}

}  // namespace

MatrixSchedule exact_schedule(const JointTable& joint) {
  if (joint.horizon() == 0) {
    throw ValidationError(kModule, "horizon must be at least 1 to define P_0");
  }
  std::vector<StochasticMatrix> slices;
  std::vector<RowFlags> flags;
  for (std::size_t t = 0; t < joint.horizon(); ++t) {
    auto fo = first_order_matrix(joint, t);
    slices.push_back(std::move(fo.matrix));
    flags.push_back(std::move(fo.flagged));
  }
  return collapse(std::move(slices), std::move(flags));
}

EmcChain build_emc(const JointTable& joint, const ProbDist& initial) {
  return EmcChain{initial, exact_schedule(joint)};
}

EmcChain build_emc(const ProcessModel& parent, std::size_t horizon, std::size_t cap) {
  try {
    return build_emc(joint_table(parent, horizon, cap), parent.initial());
  } catch (const SizeError& e) {
    throw SizeError(kModule, e.detail() +
                                 " (estimate P_t from sampled trajectories instead)");
  }
}

ProcessModel emc_as_model(const EmcChain& emc, const StateSpace& space) {
  return ProcessModel::markov_schedule(space, emc.initial, emc.schedule);
}

Propagation propagate_all(const EmcChain& emc, std::size_t t) {
  if (emc.schedule.size() != emc.initial.size()) {
    throw ValidationError(kModule, "schedule dimension does not match the initial law");
  }
  if (!emc.schedule.covers(t)) {
    throw ValidationError(kModule, "propagate: t = " + std::to_string(t) +
                                       " is beyond the schedule length " +
                                       std::to_string(emc.schedule.length()));
  }
  Propagation out;
  out.marginals.reserve(t + 1);
  out.marginals.push_back(emc.initial);
  for (std::size_t s = 0; s < t; ++s) {
    const ProbDist& cur = out.marginals.back();
    const RowFlags& flags = emc.schedule.flagged(s);
    for (State a = 0; a < cur.size(); ++a) {
      if (flags[a]) out.flagged_mass = std::max(out.flagged_mass, cur[a]);
    }
    out.marginals.push_back(apply(cur, emc.schedule.at(s)));
  }
  return out;
}

ProbDist propagate(const EmcChain& emc, std::size_t t) {
  return propagate_all(emc, t).marginals.back();
}

EstimatedMatrix estimate_homogeneous(const std::vector<Trajectory>& trajectories, std::size_t n,
                                     double smoothing) {
  std::vector<std::uint64_t> counts(n * n, 0);
  std::uint64_t transitions = 0;
  for (const auto& tr : trajectories) {
    validate_trajectory(tr, n, kModule);
    for (std::size_t i = 0; i + 1 < tr.states.size(); ++i) {
      ++counts[tr.states[i] * n + tr.states[i + 1]];
      ++transitions;
    }
  }
  auto cm = normalize_counts(counts, n, smoothing);
  return {std::move(cm.matrix), std::move(counts), std::move(cm.flagged), transitions};
}

EstimatedMatrix estimate_homogeneous(const TrajectoryEnsemble& ensemble, double smoothing) {
  return estimate_homogeneous(ensemble.trajectories, ensemble.num_states(), smoothing);
}

EstimatedSchedule estimate_schedule(const std::vector<Trajectory>& trajectories, std::size_t n,
                                    double smoothing) {
  if (trajectories.empty()) throw ValidationError(kModule, "estimate_schedule: no trajectories");
  std::size_t slices = trajectories.front().states.size();
  for (const auto& tr : trajectories) {
    validate_trajectory(tr, n, kModule);
    slices = std::min(slices, tr.states.size());
  }
  if (slices < 2) {
    throw ValidationError(kModule,
                          "estimate_schedule: trajectories of length 1 give an empty schedule");
  }
  --slices;
  EstimatedSchedule out{MatrixSchedule::homogeneous(StochasticMatrix::identity(n)), {}, {}};
  std::vector<StochasticMatrix> mats;
  std::vector<RowFlags> flags;
  for (std::size_t t = 0; t < slices; ++t) {
    std::vector<std::uint64_t> counts(n * n, 0);
    for (const auto& tr : trajectories) ++counts[tr.states[t] * n + tr.states[t + 1]];
    auto cm = normalize_counts(counts, n, smoothing);
    if (std::find(cm.flagged.begin(), cm.flagged.end(), true) != cm.flagged.end()) {
      out.sparse_slices.push_back(t);
    }
    mats.push_back(std::move(cm.matrix));
    flags.push_back(std::move(cm.flagged));
    out.counts.push_back(std::move(counts));
  }
  out.schedule = MatrixSchedule::time_varying(std::move(mats), std::move(flags));
  return out;
}

EstimatedSchedule estimate_schedule(const TrajectoryEnsemble& ensemble, double smoothing) {
  return estimate_schedule(ensemble.trajectories, ensemble.num_states(), smoothing);
}

ProbDist empirical_marginal(const std::vector<Trajectory>& trajectories, std::size_t n,
                            std::size_t t) {
  std::vector<double> counts(n, 0.0);
  for (const auto& tr : trajectories) {
    if (t >= tr.states.size()) {
      throw ValidationError(kModule, "empirical_marginal: trajectory shorter than t + 1");
    }
    counts[tr.states[t]] += 1.0;
  }
  return ProbDist::normalize(counts);
}

Lemma1Report lemma1_report(const ProcessModel& parent, std::size_t horizon,
                           const Lemma1Options& options) {
  Lemma1Report rep;
  rep.mode = options.mode;
  const std::size_t n = parent.size();
  if (horizon == 0) throw ValidationError(kModule, "lemma1_report: horizon must be at least 1");

  std::vector<ProbDist> parent_marginals;
  EmcChain emc{parent.initial(), MatrixSchedule::homogeneous(StochasticMatrix::identity(n))};

  if (options.mode == Lemma1Mode::exact) {
    const JointTable joint = joint_table(parent, horizon, options.cap);
    emc = build_emc(joint, parent.initial());
    for (std::size_t t = 0; t <= horizon; ++t) parent_marginals.push_back(marginal(joint, t));
    rep.schedule_source = "exact";
    rep.tolerance = 1e-9;
  } else {
    if (options.samples == 0) throw ValidationError(kModule, "monte-carlo mode needs samples >= 1");
    const auto ens =
        sample_ensemble(parent, horizon, options.samples, options.seed, options.threads);
    for (std::size_t t = 0; t <= horizon; ++t) {
      parent_marginals.push_back(empirical_marginal(ens.trajectories, n, t));
    }
    try {
      emc = build_emc(joint_table(parent, horizon, options.cap), parent.initial());
      rep.schedule_source = "exact";
    } catch (const SizeError&) {
      const auto est_ens = sample_ensemble(parent, horizon, options.samples,
                                           mix64(options.seed ^ kEstimationSalt), options.threads);
      emc = EmcChain{parent.initial(), estimate_schedule(est_ens).schedule};
      rep.schedule_source = "estimated";
    }
    rep.samples = options.samples;
    rep.seed = options.seed;
    rep.tolerance = 3.0 * std::sqrt(static_cast<double>(n) / (2.0 * static_cast<double>(options.samples))) + 0.005;
  }

  rep.homogeneous = emc.schedule.is_homogeneous();
  for (std::size_t t = 0; t < emc.schedule.length(); ++t) {
    const RowFlags& f = emc.schedule.flagged(t);
    for (State a = 0; a < n; ++a) {
      if (f[a]) rep.flagged_rows.push_back({t, a});
    }
  }
  const Propagation prop = propagate_all(emc, horizon);
  rep.flagged_mass = prop.flagged_mass;
  for (std::size_t t = 0; t <= horizon; ++t) {
    const double tv = tv_distance(parent_marginals[t], prop.marginals[t]);
    rep.rows.push_back({t, tv});
    rep.max_tv = std::max(rep.max_tv, tv);
  }
  rep.passed = rep.max_tv <= rep.tolerance;
  return rep;
}

}  // namespace emclab
