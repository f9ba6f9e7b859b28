#include "emclab/verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "emclab/analysis.hpp"
#include "emclab/censoring.hpp"
#include "emclab/emc_chain.hpp"
#include "emclab/errors.hpp"
#include "emclab/io.hpp"
#include "emclab/scenarios.hpp"

namespace emclab {
namespace {

constexpr std::size_t kExactHorizon = 8;

struct Measured {
  double value = 0.0;
  std::string detail;
};

class Runner {
 public:
  explicit Runner(VerifyReport& report) : report_(report) {}

  void check(std::string name, std::string scenario, int criterion, std::string comparison,
             double tolerance, const std::function<Measured()>& body) {
    CheckResult r{std::move(name), std::move(scenario), criterion, false, 0.0, tolerance,
                  comparison, ""};
    try {
      Measured m = body();
      r.value = m.value;
      r.detail = std::move(m.detail);
      if (comparison == "<=") {
        r.passed = m.value <= tolerance;
      } else if (comparison == ">=") {
        r.passed = m.value >= tolerance;
      } else {
        r.passed = m.value == tolerance;
      }
    } catch (const std::exception& e) {
      r.passed = false;
      r.value = std::nan("");
      r.detail = std::string("error: ") + e.what();
    }
    report_.checks.push_back(std::move(r));
  }

 private:
  VerifyReport& report_;
};

std::string states_text(const std::vector<State>& s) {
  std::string out = "(";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
  return out + ")";
}

// The first-order matrix a scenario contributes to the matrix checks: its
// homogeneous P when the exact schedule is homogeneous, P_0 otherwise.
StochasticMatrix scenario_matrix(const ProcessModel& model, std::size_t cap) {
  return build_emc(model, 4, cap).schedule.at(0);
}

std::vector<StochasticMatrix> doubly_stochastic_matrices() {
  return {StochasticMatrix::from_rows({{0.3, 0.7}, {0.7, 0.3}}),
          StochasticMatrix::from_rows({{0.5, 0.3, 0.2}, {0.2, 0.5, 0.3}, {0.3, 0.2, 0.5}}),
          StochasticMatrix::from_rows({{0.0, 0.5, 0.5}, {0.5, 0.0, 0.5}, {0.5, 0.5, 0.0}}),
          StochasticMatrix::from_rows({{0.0, 1.0}, {1.0, 0.0}})};
}

std::vector<std::vector<State>> nonempty_subsets(std::size_t n) {
  std::vector<std::vector<State>> out;
  for (std::size_t mask = 1; mask < (std::size_t{1} << n); ++mask) {
    std::vector<State> s;
    for (State i = 0; i < n; ++i) {
      if (mask & (std::size_t{1} << i)) s.push_back(i);
    }
    out.push_back(std::move(s));
  }
  return out;
}

// max over nonempty A of the stochastic-complement and hit-propagation deviations.
Measured censoring_exact_deviation(const StochasticMatrix& p) {
  const ProbDist pi = stationary(p);
  double worst = 0.0;
  for (const auto& members : nonempty_subsets(p.size())) {
    const CensorSet a(members, p.size());
    const ProbDist pi_a = conditional_on(pi, a);
    const CensoredMatrix c = censored_matrix(p, a);
    const ProbDist pi_c = embed(stationary(c.matrix), a);
    worst = std::max(worst, max_abs_diff(pi_c.weights(), pi_a.weights()));
    for (const auto& hit : exact_hit_distributions(p, a, pi_a, 11)) {
      worst = std::max(worst, max_abs_diff(hit.weights(), pi_a.weights()));
    }
  }
  return {worst, std::to_string((std::size_t{1} << p.size()) - 1) + " censor sets, hits k <= 10"};
}

void scenario_checks(Runner& run, const std::string& name, const VerifyOptions& opt) {
  const ProcessModel model = builtin_scenario(name);

  run.check("lemma1_exact", name, 1, "<=", 1e-9, [&] {
    Lemma1Options lo;
    lo.cap = opt.cap;
    const auto rep = lemma1_report(model, kExactHorizon, lo);
    return Measured{rep.max_tv, "T = 8, exact enumeration"};
  });

  run.check("trajectory_sum", name, 2, "<=", 1e-9, [&] {
    const JointTable joint = joint_table(model, kExactHorizon, opt.cap);
    const EmcChain emc = build_emc(joint, model.initial());
    const Propagation prop = propagate_all(emc, kExactHorizon);
    double worst = 0.0;
    for (std::size_t t = 0; t <= kExactHorizon; ++t) {
      for (State a = 0; a < model.size(); ++a) {
        const double sum = trajectory_sum(model.initial(), emc.schedule, t, a, opt.cap);
        worst = std::max(worst, std::abs(sum - prop.marginals[t][a]));
      }
    }
    return Measured{worst, "literal path sum vs matrix product, t <= 8"};
  });

  if (model.is_markov()) {
    run.check("history_gap_markov", name, 3, "==", 0.0, [&] {
      const JointTable joint = joint_table(model, kExactHorizon, opt.cap);
      double worst = 0.0;
      for (std::size_t t = 0; t < kExactHorizon; ++t) worst = std::max(worst, history_gap(joint, t).gap);
      return Measured{worst, "max gap over t < 8"};
    });
  }

  if (name == "secondorder") {
    run.check("history_gap_witness", name, 3, ">=", 0.5, [&] {
      const JointTable joint = joint_table(model, 4, opt.cap);
      HistoryGap best;
      for (std::size_t t = 0; t <= 3; ++t) {
        auto g = history_gap(joint, t);
        if (g.gap > best.gap) best = g;
      }
      return Measured{best.gap, "t = " + std::to_string(best.time) + ", witness " +
                                    states_text(best.witness) + " -> " +
                                    std::to_string(best.next_state) + " with probability " +
                                    format_double(best.witness_conditional) + " vs p_t = " +
                                    format_double(best.first_order) + "; contrast " +
                                    states_text(best.contrast) + " gives " +
                                    format_double(best.contrast_conditional)};
    });

    const ProcessModel stationary_model = builtin_scenario("secondorder-stationary");
    run.check("theorem1_identity", "secondorder-stationary", 5, "<=", 1e-9, [&] {
      const auto chk = theorem1_identity_check(stationary_model, kExactHorizon, opt.cap);
      return Measured{chk.max_deviation, "T = 8, homogeneous exact schedule"};
    });

    run.check("censoring_statistical", "secondorder-stationary", 9, "<=", 0.02, [&] {
      HitCheckOptions ho;
      ho.hits = 5;
      ho.samples = 50000;
      ho.seed = opt.seed;
      ho.cap = opt.cap;
      ho.threads = opt.threads;
      const auto rep = a_hit_distribution_check(stationary_model, CensorSet({0}, 2), ho);
      return Measured{rep.max_tv, "A = {0}, N = 50000, 5 hits, rejected " +
                                      std::to_string(rep.rejected) + ", statistical bound " +
                                      format_double(rep.tolerance)};
    });
  }

  if (name == "reinforced") {
    run.check("lemma1_monte_carlo", name, 4, "<=", 0.02, [&] {
      Lemma1Options lo;
      lo.mode = Lemma1Mode::monte_carlo;
      lo.samples = 100000;
      lo.seed = opt.seed;
      lo.cap = opt.cap;
      lo.threads = opt.threads;
      const auto rep = lemma1_report(model, 10, lo);
      return Measured{rep.max_tv, "N = 100000, T = 10, schedule " + rep.schedule_source +
                                      (rep.homogeneous ? " (homogeneous)" : " (time-varying)")};
    });
  }

  if (name == "markov2") {
    run.check("estimator_consistency", name, 10, "==", 1.0, [&] {
      const StochasticMatrix truth = build_emc(model, 4, opt.cap).schedule.at(0);
      const std::size_t sizes[] = {1000, 10000, 100000};
      std::vector<double> medians;
      for (std::size_t size : sizes) {
        std::vector<double> errs;
        for (std::uint64_t s = 0; s < 20; ++s) {
          const Trajectory tr = sample_trajectory(model, size, derive_seed(opt.seed ^ size, s));
          const auto est = estimate_homogeneous({tr}, model.size());
          errs.push_back(max_abs_diff(est.matrix, truth));
        }
        std::sort(errs.begin(), errs.end());
        medians.push_back(0.5 * (errs[9] + errs[10]));
      }
      const bool ok = medians[1] <= medians[0] && medians[2] <= medians[1];
      return Measured{ok ? 1.0 : 0.0, "median max-entry error " + format_double(medians[0]) +
                                          ", " + format_double(medians[1]) + ", " +
                                          format_double(medians[2])};
    });

    run.check("ensemble_determinism", name, 11, "==", 1.0, [&] {
      const auto a = ensemble_to_jsonl(sample_ensemble(model, 20, 200, opt.seed, 1));
      const auto b = ensemble_to_jsonl(sample_ensemble(model, 20, 200, opt.seed, 4));
      const auto c = ensemble_to_jsonl(sample_ensemble(model, 20, 200, opt.seed, 1));
      return Measured{(a == b && a == c) ? 1.0 : 0.0, "rerun and 4-thread ensembles compared"};
    });
  }
}

void matrix_checks(Runner& run, const std::vector<std::string>& scenarios,
                   const VerifyOptions& opt) {
  std::vector<std::pair<std::string, StochasticMatrix>> mats;
  auto names = scenarios;
  if (std::find(names.begin(), names.end(), "secondorder") != names.end()) {
    names.push_back("secondorder-stationary");
  }
  for (const auto& n : names) {
    try {
      mats.emplace_back(n, scenario_matrix(builtin_scenario(n), opt.cap));
    } catch (const std::exception& e) {
      const std::string msg = e.what();
      run.check("scenario_matrix", n, 0, "==", 1.0,
                [&]() -> Measured { throw std::runtime_error(msg); });
    }
  }

  run.check("stationary_two_state", "solver", 6, "<=", 1e-10, [] {
    const auto p = StochasticMatrix::from_rows({{0.9, 0.1}, {0.2, 0.8}});
    // pi_0 = p_10 / (p_01 + p_10)
    const double a = 0.2 / (0.1 + 0.2);
    const auto pi = stationary(p);
    return Measured{std::max(std::abs(pi[0] - a), std::abs(pi[1] - (1.0 - a))),
                    "P = [[0.9,0.1],[0.2,0.8]] vs (2/3, 1/3)"};
  });

  run.check("stationary_doubly_stochastic", "solver", 6, "<=", 1e-10, [] {
    double worst = 0.0;
    for (const auto& p : doubly_stochastic_matrices()) {
      const auto pi = stationary(p);
      const ProbDist u = ProbDist::uniform(p.size());
      worst = std::max(worst, max_abs_diff(pi.weights(), u.weights()));
    }
    return Measured{worst, "4 doubly stochastic irreducible matrices vs uniform"};
  });

  run.check("stationary_power_agreement", "solver", 6, "<=", 1e-9, [&] {
    double worst = 0.0;
    std::size_t used = 0;
    for (const auto& [n, p] : mats) {
      const auto res = stationary_detailed(p);
      if (!res.power_checked) continue;
      ++used;
      worst = std::max(worst, res.power_agreement);
    }
    return Measured{worst, std::to_string(used) + " aperiodic scenario matrices"};
  });

  run.check("structure_positive", "solver", 7, "==", 1.0, [] {
    const auto rep = structure(StochasticMatrix::from_rows({{0.5, 0.3, 0.2}, {0.1, 0.6, 0.3}, {0.3, 0.3, 0.4}}));
    const bool ok = rep.irreducible && rep.certificate == 1u && rep.aperiodic;
    return Measured{ok ? 1.0 : 0.0, "entrywise positive: irreducible, k = 1"};
  });

  run.check("structure_identity", "solver", 7, "==", 1.0, [] {
    const auto rep = structure(StochasticMatrix::identity(3));
    return Measured{rep.irreducible ? 0.0 : 1.0, "identity: reducible"};
  });

  run.check("structure_two_cycle", "solver", 7, "==", 1.0, [] {
    const auto rep = structure(StochasticMatrix::from_rows({{0.0, 1.0}, {1.0, 0.0}}));
    const bool ok = rep.irreducible && !rep.aperiodic && rep.periods[0] == 2 &&
                    rep.periods[1] == 2 && !rep.certificate;
    return Measured{ok ? 1.0 : 0.0, "two-cycle: irreducible, period 2"};
  });

  run.check("certificate_soundness", "solver", 7, "==", 1.0, [&] {
    std::vector<StochasticMatrix> all;
    for (const auto& [n, p] : mats) all.push_back(p);
    for (auto& p : doubly_stochastic_matrices()) all.push_back(p);
    all.push_back(StochasticMatrix::from_rows({{0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}, {0.5, 0.5, 0.0}}));
    std::size_t certified = 0;
    for (const auto& p : all) {
      const auto rep = structure(p);
      if (!rep.certificate) continue;
      ++certified;
      const auto pk = power(p, *rep.certificate);
      for (double x : pk.data()) {
        if (!(x > kPositiveThreshold)) return Measured{0.0, "P^k has a zero entry"};
      }
    }
    return Measured{1.0, std::to_string(certified) + " certificates checked"};
  });

  run.check("censoring_exact", "solver", 8, "<=", 1e-9, [&] {
    double worst = 0.0;
    std::size_t used = 0;
    std::vector<StochasticMatrix> all;
    for (const auto& [n, p] : mats) all.push_back(p);
    for (auto& p : doubly_stochastic_matrices()) all.push_back(p);
    for (const auto& p : all) {
      if (!structure(p).irreducible) continue;
      ++used;
      worst = std::max(worst, censoring_exact_deviation(p).value);
    }
    return Measured{worst, std::to_string(used) + " irreducible matrices, every nonempty A"};
  });

  if (opt.matrix_path) {
    run.check("matrix_input", *opt.matrix_path, 0, "==", 1.0, [&] {
      const auto lm = matrix_from_json(parse_json(read_file(*opt.matrix_path), *opt.matrix_path));
      const auto rep = structure(lm.matrix);
      if (!rep.irreducible) return Measured{1.0, "loaded; reducible, stationary checks skipped"};
      const auto st = stationary_detailed(lm.matrix);
      if (st.residual > 1e-12) return Measured{0.0, "stationary residual " + format_double(st.residual)};
      if (st.power_checked && st.power_agreement > 1e-9) {
        return Measured{0.0, "power iteration disagrees by " + format_double(st.power_agreement)};
      }
      const auto cen = censoring_exact_deviation(lm.matrix);
      if (cen.value > 1e-9) return Measured{0.0, "censoring deviation " + format_double(cen.value)};
      return Measured{1.0, "structure, stationary and censoring checks passed"};
    });
  }
}

}  // namespace

const CheckResult* VerifyReport::first_failure() const {
  for (const auto& c : checks) {
    if (!c.passed) return &c;
  }
  return nullptr;
}

VerifyReport run_verification(std::string_view scenario, const VerifyOptions& options) {
  std::vector<std::string> names;
  if (scenario == "all") {
    names = scenario_names();
  } else {
    const auto& known = scenario_names();
    if (std::find(known.begin(), known.end(), scenario) == known.end()) {
      throw ValidationError("verify", "unknown scenario '" + std::string(scenario) +
                                          "' (expected markov2, secondorder, reinforced, regime "
                                          "or all)");
    }
    names.emplace_back(scenario);
  }
  VerifyReport report;
  report.scenario = std::string(scenario);
  report.seed = options.seed;
  Runner run(report);
  for (const auto& n : names) scenario_checks(run, n, options);
  matrix_checks(run, names, options);
  report.all_passed = report.first_failure() == nullptr;
  return report;
}

}  // namespace emclab
