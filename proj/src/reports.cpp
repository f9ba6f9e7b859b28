#include "emclab/reports.hpp"

#include <cmath>

#include "emclab/io.hpp"

#ifndef EMCLAB_VERSION
#define EMCLAB_VERSION "0.0.0"
#endif

namespace emclab {
namespace {

using nlohmann::json;

json labels_of(const std::vector<State>& states, const StateSpace& space) {
  json out = json::array();
  for (State s : states) out.push_back(space.label(s));
  return out;
}

json weights(const ProbDist& d) { return json(std::vector<double>(d.weights().begin(), d.weights().end())); }

json flags_json(const RowFlags& f, const StateSpace& space) {
  json out = json::array();
  for (State a = 0; a < f.size(); ++a) {
    if (f[a]) out.push_back(space.label(a));
  }
  return out;
}

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

}  // namespace

std::string version_string() { return std::string("emclab ") + EMCLAB_VERSION; }

json schedule_to_json(const MatrixSchedule& schedule, const StateSpace& space) {
  json out;
  out["homogeneous"] = schedule.is_homogeneous();
  json slices = json::array();
  for (std::size_t t = 0; t < schedule.length(); ++t) {
    json m = matrix_to_json(space, schedule.at(t));
    m["t"] = t;
    m["flagged_rows"] = flags_json(schedule.flagged(t), space);
    slices.push_back(std::move(m));
  }
  out["matrices"] = std::move(slices);
  return out;
}

json lemma1_to_json(const Lemma1Report& rep, const StateSpace& space) {
  json out;
  out["mode"] = rep.mode == Lemma1Mode::exact ? "exact" : "monte-carlo";
  out["schedule_source"] = rep.schedule_source;
  out["homogeneous"] = rep.homogeneous;
  json rows = json::array();
  for (const auto& r : rep.rows) rows.push_back({{"t", r.t}, {"tv", r.tv}});
  out["rows"] = std::move(rows);
  out["max_tv"] = rep.max_tv;
  out["tolerance"] = rep.tolerance;
  out["passed"] = rep.passed;
  json flagged = json::array();
  for (const auto& f : rep.flagged_rows) flagged.push_back({{"t", f.t}, {"state", space.label(f.state)}});
  out["flagged_rows"] = std::move(flagged);
  out["flagged_mass"] = rep.flagged_mass;
  if (rep.mode == Lemma1Mode::monte_carlo) {
    out["samples"] = rep.samples;
    out["seed"] = rep.seed;
  }
  return out;
}

json hit_report_to_json(const HitReport& rep, const StateSpace& space) {
  json out;
  out["A"] = labels_of(rep.members, space);
  out["pi"] = weights(rep.pi);
  out["pi_A"] = weights(rep.pi_a);
  json rows = json::array();
  for (const auto& r : rep.per_hit) {
    json row{{"k", r.k}, {"tv", r.tv}, {"n_effective", r.n_effective}};
    if (r.exact_tv) row["exact_tv"] = *r.exact_tv;
    rows.push_back(std::move(row));
  }
  out["per_hit"] = std::move(rows);
  out["rejected"] = rep.rejected;
  out["initial_horizon"] = rep.initial_horizon;
  out["tolerance"] = rep.tolerance;
  out["max_tv"] = rep.max_tv;
  out["passed"] = rep.passed;
  out["markov_parent"] = rep.markov_parent;
  out["note"] = rep.note;
  return out;
}

json censored_matrix_to_json(const CensoredMatrix& c, const StateSpace& space) {
  json out;
  out["A"] = labels_of(c.members, space);
  json rows = json::array();
  const std::size_t m = c.matrix.size();
  for (State a = 0; a < m; ++a) {
    auto r = c.matrix.row(a);
    rows.push_back(std::vector<double>(r.begin(), r.end()));
  }
  out["rows"] = std::move(rows);
  out["condition"] = number_or_null(c.condition);
  out["ill_conditioned"] = c.ill_conditioned;
  return out;
}

json structure_to_json(const StructureReport& rep, const StateSpace& space) {
  json out;
  out["irreducible"] = rep.irreducible;
  out["aperiodic"] = rep.aperiodic;
  out["primitive"] = rep.primitive();
  out["certificate"] = rep.certificate ? json(*rep.certificate) : json(nullptr);
  json periods = json::object();
  for (State s = 0; s < rep.periods.size(); ++s) periods[space.label(s)] = rep.periods[s];
  out["periods"] = std::move(periods);
  json classes = json::array();
  for (const auto& c : rep.classes) classes.push_back(labels_of(c, space));
  out["classes"] = std::move(classes);
  json closed = json::array();
  for (const auto& c : rep.closed_classes) closed.push_back(labels_of(c, space));
  out["closed_classes"] = std::move(closed);
  return out;
}

json stationary_to_json(const StationaryResult& res, const StateSpace& space) {
  json out = dist_to_json(space, res.pi);
  out["residual"] = res.residual;
  out["power_checked"] = res.power_checked;
  if (res.power_checked) {
    out["power_agreement"] = res.power_agreement;
    out["power_iterations"] = res.power_iterations;
  }
  return out;
}

json profile_to_json(const ConvergenceProfile& prof, const StateSpace& space) {
  json out;
  json rows = json::array();
  for (const auto& [t, tv] : prof.rows) rows.push_back({{"t", t}, {"tv", tv}});
  out["rows"] = std::move(rows);
  out["stationary"] = dist_to_json(space, prof.stationary);
  out["limit_threshold"] = prof.limit_threshold;
  out["limit_reached"] = prof.limit_reached;
  return out;
}

json theorem1_to_json(const Theorem1Check& chk, const StateSpace& space) {
  return {{"horizon", chk.horizon},
          {"max_deviation", chk.max_deviation},
          {"tolerance", chk.tolerance},
          {"passed", chk.passed},
          {"stationary", dist_to_json(space, chk.stationary)},
          {"matrix", matrix_to_json(space, chk.matrix)}};
}

json estimated_matrix_to_json(const EstimatedMatrix& est, const StateSpace& space) {
  json out = matrix_to_json(space, est.matrix);
  out["counts"] = est.counts;
  out["transitions"] = est.transitions;
  out["flagged_rows"] = flags_json(est.flagged, space);
  return out;
}

json estimated_schedule_to_json(const EstimatedSchedule& est, const StateSpace& space) {
  json out = schedule_to_json(est.schedule, space);
  for (std::size_t t = 0; t < est.counts.size(); ++t) out["matrices"][t]["counts"] = est.counts[t];
  out["sparse_slices"] = est.sparse_slices;
  return out;
}

json history_gap_to_json(const HistoryGap& gap, const StateSpace& space) {
  json out{{"t", gap.time}, {"gap", gap.gap}};
  if (!gap.witness.empty()) {
    out["witness"] = labels_of(gap.witness, space);
    out["next_state"] = space.label(gap.next_state);
    out["witness_conditional"] = gap.witness_conditional;
    out["first_order"] = gap.first_order;
    out["contrast"] = labels_of(gap.contrast, space);
    out["contrast_conditional"] = gap.contrast_conditional;
  }
  return out;
}

json oracle_to_json(const JointTable& joint, const StateSpace& space) {
  json out;
  out["horizon"] = joint.horizon();
  out["entries"] = joint.entries();
  json marginals = json::array();
  for (std::size_t t = 0; t <= joint.horizon(); ++t) {
    json m = dist_to_json(space, marginal(joint, t));
    m["t"] = t;
    marginals.push_back(std::move(m));
  }
  out["marginals"] = std::move(marginals);
  if (joint.horizon() > 0) {
    out["schedule"] = schedule_to_json(exact_schedule(joint), space);
    json gaps = json::array();
    double worst = 0.0;
    for (std::size_t t = 0; t < joint.horizon(); ++t) {
      const HistoryGap g = history_gap(joint, t);
      worst = std::max(worst, g.gap);
      gaps.push_back(history_gap_to_json(g, space));
    }
    out["history_gaps"] = std::move(gaps);
    out["max_history_gap"] = worst;
  }
  return out;
}

json verify_to_json(const VerifyReport& rep) {
  json checks = json::array();
  for (const auto& c : rep.checks) {
    checks.push_back({{"name", c.name},
                      {"scenario", c.scenario},
                      {"criterion", c.criterion},
                      {"passed", c.passed},
                      {"value", number_or_null(c.value)},
                      {"tolerance", c.tolerance},
                      {"comparison", c.comparison},
                      {"detail", c.detail}});
  }
  return {{"scenario", rep.scenario},
          {"seed", rep.seed},
          {"all_passed", rep.all_passed},
          {"checks", std::move(checks)}};
}

json envelope(std::string_view command, const json& config, const json& result) {
  return {{"tool", version_string()},
          {"command", std::string(command)},
          {"config", config},
          {"result", result}};
}

std::string render(const json& j) { return j.dump(2) + "\n"; }

}  // namespace emclab
