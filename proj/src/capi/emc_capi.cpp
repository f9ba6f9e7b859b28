#include "emclab/emc.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <optional>
#include <string>

#include "emclab/analysis.hpp"
#include "emclab/censoring.hpp"
#include "emclab/emc_chain.hpp"
#include "emclab/errors.hpp"
#include "emclab/io.hpp"
#include "emclab/reports.hpp"
#include "emclab/scenarios.hpp"
#include "emclab/verify.hpp"

struct emc_model {
  emclab::ProcessModel model;
};

struct emc_matrix {
  emclab::LabeledMatrix value;
};

namespace {

using nlohmann::json;

thread_local std::string g_last_error;

emc_status fail(emc_status s, std::string msg) {
  g_last_error = std::move(msg);
  return s;
}

template <typename F>
emc_status guarded(F&& body) {
  g_last_error.clear();
  try {
    body();
    return EMC_OK;
  } catch (const emclab::Error& e) {
    return fail(static_cast<emc_status>(static_cast<int>(e.kind())), e.what());
  } catch (const std::bad_alloc&) {
    return fail(EMC_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(EMC_ERR_INTERNAL, e.what());
  }
}

void require(const void* p, const char* what) {
  if (p == nullptr) throw emclab::ValidationError("capi", std::string(what) + " is NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

void put(char** out, const std::string& s) {
  require(out, "output pointer");
  *out = dup_string(s);
}

void copy_out(std::span<const double> src, double* out, std::size_t out_len) {
  require(out, "output buffer");
  if (out_len < src.size()) {
    throw emclab::ValidationError("capi", "output buffer holds " + std::to_string(out_len) +
                                              " values, need " + std::to_string(src.size()));
  }
  std::copy(src.begin(), src.end(), out);
}

// Largest horizon <= 6 that the cap allows.
std::size_t oracle_horizon(std::size_t n, std::size_t cap) {
  for (std::size_t h = 6; h > 1; --h) {
    try {
      emclab::enumeration_size(n, h, cap);
      return h;
    } catch (const emclab::SizeError&) {
    }
  }
  return 1;
}

emclab::StochasticMatrix homogeneous_first_order(const emclab::ProcessModel& model,
                                                 std::size_t horizon, std::size_t cap) {
  const auto emc = emclab::build_emc(model, horizon, cap);
  if (!emc.schedule.is_homogeneous()) {
    throw emclab::StructuralError("emc-builder", "the exact first-order schedule is time-varying "
                                                 "over t < " + std::to_string(horizon) +
                                                 "; no single matrix describes this process");
  }
  return emc.schedule.at(0);
}

}  // namespace

extern "C" {

const char* emc_version(void) {
  static const std::string v = emclab::version_string();
  return v.c_str();
}

const char* emc_last_error(void) { return g_last_error.c_str(); }

void emc_string_free(char* s) { std::free(s); }

emc_status emc_model_from_json(const char* text, emc_model** out) {
  return guarded([&] {
    require(text, "json");
    require(out, "output pointer");
    *out = new emc_model{emclab::build_model(emclab::parse_json(text, "model"))};
  });
}

emc_status emc_model_from_file(const char* path, emc_model** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "output pointer");
    *out = new emc_model{emclab::build_model_from_file(path)};
  });
}

emc_status emc_model_builtin(const char* name, emc_model** out) {
  return guarded([&] {
    require(name, "name");
    require(out, "output pointer");
    *out = new emc_model{emclab::builtin_scenario(name)};
  });
}

emc_status emc_model_from_matrix(const emc_matrix* matrix, const double* initial, emc_model** out) {
  return guarded([&] {
    require(matrix, "matrix");
    require(out, "output pointer");
    const std::size_t n = matrix->value.matrix.size();
    const emclab::ProbDist init =
        initial ? emclab::ProbDist::strict(std::vector<double>(initial, initial + n))
                : emclab::ProbDist::uniform(n);
    *out = new emc_model{
        emclab::ProcessModel::memoryless(matrix->value.space, init, matrix->value.matrix)};
  });
}

void emc_model_free(emc_model* model) { delete model; }

emc_status emc_model_num_states(const emc_model* model, size_t* out) {
  return guarded([&] {
    require(model, "model");
    require(out, "output pointer");
    *out = model->model.size();
  });
}

emc_status emc_model_to_json(const emc_model* model, char** out) {
  return guarded([&] {
    require(model, "model");
    put(out, emclab::render(emclab::model_to_json(model->model)));
  });
}

emc_status emc_model_fingerprint(const emc_model* model, char** out) {
  return guarded([&] {
    require(model, "model");
    put(out, model->model.fingerprint());
  });
}

emc_status emc_model_conditional_next(const emc_model* model, const uint32_t* history,
                                      size_t length, double* out, size_t out_len) {
  return guarded([&] {
    require(model, "model");
    if (length > 0) require(history, "history");
    const auto law = model->model.conditional_next(std::span<const emclab::State>(history, length));
    copy_out(law.weights(), out, out_len);
  });
}

emc_status emc_model_first_order(const emc_model* model, size_t horizon, size_t cap,
                                 emc_matrix** out) {
  return guarded([&] {
    require(model, "model");
    require(out, "output pointer");
    *out = new emc_matrix{{model->model.space(), homogeneous_first_order(model->model, horizon, cap)}};
  });
}

emc_status emc_matrix_create(size_t n, const double* rows, const char* const* labels,
                             emc_matrix** out) {
  return guarded([&] {
    require(rows, "rows");
    require(out, "output pointer");
    if (n == 0) throw emclab::ValidationError("state-core", "matrix must have at least one state");
    emclab::StateSpace space = emclab::StateSpace::indexed(n);
    if (labels) {
      std::vector<std::string> l;
      for (std::size_t i = 0; i < n; ++i) {
        require(labels[i], "label");
        l.emplace_back(labels[i]);
      }
      space = emclab::StateSpace(std::move(l));
    }
    *out = new emc_matrix{{space, emclab::StochasticMatrix::strict(n, std::vector<double>(rows, rows + n * n))}};
  });
}

emc_status emc_matrix_from_json(const char* text, emc_matrix** out) {
  return guarded([&] {
    require(text, "json");
    require(out, "output pointer");
    *out = new emc_matrix{emclab::matrix_from_json(emclab::parse_json(text, "matrix"))};
  });
}

emc_status emc_matrix_from_file(const char* path, emc_matrix** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "output pointer");
    *out = new emc_matrix{emclab::matrix_from_json(emclab::parse_json(emclab::read_file(path), path))};
  });
}

void emc_matrix_free(emc_matrix* matrix) { delete matrix; }

emc_status emc_matrix_size(const emc_matrix* matrix, size_t* out) {
  return guarded([&] {
    require(matrix, "matrix");
    require(out, "output pointer");
    *out = matrix->value.matrix.size();
  });
}

emc_status emc_matrix_entries(const emc_matrix* matrix, double* out, size_t out_len) {
  return guarded([&] {
    require(matrix, "matrix");
    copy_out(matrix->value.matrix.data(), out, out_len);
  });
}

emc_status emc_matrix_to_json(const emc_matrix* matrix, char** out) {
  return guarded([&] {
    require(matrix, "matrix");
    put(out, emclab::render(emclab::matrix_to_json(matrix->value.space, matrix->value.matrix)));
  });
}

emc_status emc_matrix_to_csv(const emc_matrix* matrix, char** out) {
  return guarded([&] {
    require(matrix, "matrix");
    put(out, emclab::matrix_to_csv(matrix->value.matrix));
  });
}

emc_status emc_stationary(const emc_matrix* matrix, double* out, size_t out_len) {
  return guarded([&] {
    require(matrix, "matrix");
    copy_out(emclab::stationary(matrix->value.matrix).weights(), out, out_len);
  });
}

emc_status emc_structure_json(const emc_matrix* matrix, char** out) {
  return guarded([&] {
    require(matrix, "matrix");
    put(out, emclab::render(emclab::structure_to_json(emclab::structure(matrix->value.matrix),
                                                      matrix->value.space)));
  });
}

emc_status emc_analyze_json(const emc_matrix* matrix, const double* initial, size_t t_max,
                            int require_ergodic, char** out, char** profile_csv) {
  return guarded([&] {
    require(matrix, "matrix");
    require(out, "output pointer");
    const auto& p = matrix->value.matrix;
    const auto& space = matrix->value.space;
    const std::size_t n = p.size();
    const auto rep = emclab::structure(p);
    json result;
    result["structure"] = emclab::structure_to_json(rep, space);
    if (require_ergodic && !rep.primitive()) {
      throw emclab::StructuralError("chain-analysis",
                                    rep.irreducible ? "matrix is periodic; ergodicity required"
                                                    : "matrix is reducible; ergodicity required");
    }
    if (rep.irreducible) {
      result["stationary"] = emclab::stationary_to_json(emclab::stationary_detailed(p), space);
    } else {
      result["stationary"] = nullptr;
    }
    std::string csv;
    if (rep.primitive()) {
      const emclab::ProbDist init =
          initial ? emclab::ProbDist::strict(std::vector<double>(initial, initial + n))
                  : emclab::ProbDist::point(n, 0);
      const auto prof = emclab::convergence_profile(init, p, t_max);
      result["profile"] = emclab::profile_to_json(prof, space);
      csv = emclab::profile_csv(prof);
    }
    *out = dup_string(emclab::render(result));
    if (profile_csv) *profile_csv = csv.empty() ? nullptr : dup_string(csv);
  });
}

emc_status emc_simulate_jsonl(const emc_model* model, size_t horizon, size_t count, uint64_t seed,
                              unsigned threads, char** out) {
  return guarded([&] {
    require(model, "model");
    put(out, emclab::ensemble_to_jsonl(
                 emclab::sample_ensemble(model->model, horizon, count, seed, threads)));
  });
}

emc_status emc_estimate_json(const char* ensemble_jsonl, int per_time, double smoothing,
                             char** out) {
  return guarded([&] {
    require(ensemble_jsonl, "ensemble");
    const auto ens = emclab::ensemble_from_jsonl(ensemble_jsonl);
    const emclab::StateSpace space(ens.labels);
    json result{{"fingerprint", ens.fingerprint},
                {"trajectories", ens.size()},
                {"horizon", ens.horizon},
                {"smoothing", smoothing}};
    if (per_time) {
      result["schedule"] = emclab::estimated_schedule_to_json(emclab::estimate_schedule(ens, smoothing), space);
    } else {
      result["matrix"] = emclab::estimated_matrix_to_json(emclab::estimate_homogeneous(ens, smoothing), space);
    }
    put(out, emclab::render(result));
  });
}

emc_status emc_oracle_json(const emc_model* model, size_t horizon, size_t cap, char** out,
                           char** joint_csv) {
  return guarded([&] {
    require(model, "model");
    require(out, "output pointer");
    const auto joint = emclab::joint_table(model->model, horizon, cap);
    const std::string report = emclab::render(emclab::oracle_to_json(joint, model->model.space()));
    const std::string csv = joint_csv ? emclab::joint_table_csv(joint, &model->model.space()) : "";
    *out = dup_string(report);
    if (joint_csv) *joint_csv = dup_string(csv);
  });
}

emc_status emc_lemma1_json(const emc_model* model, size_t horizon, int monte_carlo, size_t samples,
                           uint64_t seed, size_t cap, unsigned threads, char** out) {
  return guarded([&] {
    require(model, "model");
    emclab::Lemma1Options opt;
    opt.mode = monte_carlo ? emclab::Lemma1Mode::monte_carlo : emclab::Lemma1Mode::exact;
    opt.samples = samples;
    opt.seed = seed;
    opt.cap = cap;
    opt.threads = threads;
    const auto rep = emclab::lemma1_report(model->model, horizon, opt);
    json result = emclab::lemma1_to_json(rep, model->model.space());
    put(out, emclab::render(result));
  });
}

emc_status emc_theorem1_json(const emc_model* model, size_t horizon, size_t cap, char** out) {
  return guarded([&] {
    require(model, "model");
    const auto chk = emclab::theorem1_identity_check(model->model, horizon, cap);
    put(out, emclab::render(emclab::theorem1_to_json(chk, model->model.space())));
  });
}

emc_status emc_censor_json(const emc_model* model, const char* const* members, size_t count,
                           size_t hits, size_t samples, uint64_t seed, size_t cap, unsigned threads,
                           char** out) {
  return guarded([&] {
    require(model, "model");
    require(members, "members");
    const auto& m = model->model;
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < count; ++i) {
      require(members[i], "member label");
      labels.emplace_back(members[i]);
    }
    const auto a = emclab::CensorSet::from_labels(labels, m.space());
    const auto p = homogeneous_first_order(m, oracle_horizon(m.size(), cap), cap);
    const auto censored = emclab::censored_matrix(p, a);

    emclab::HitCheckOptions opt;
    opt.hits = hits;
    opt.samples = samples;
    opt.seed = seed;
    opt.cap = cap;
    opt.threads = threads;
    const auto rep = emclab::a_hit_distribution_check(m, a, opt);
    json result{{"censored_matrix", emclab::censored_matrix_to_json(censored, m.space())},
                {"pi_A", emclab::dist_to_json(m.space(), rep.pi_a)},
                {"hit_report", emclab::hit_report_to_json(rep, m.space())}};
    put(out, emclab::render(result));
  });
}

emc_status emc_verify_json(const char* scenario, uint64_t seed, size_t cap, unsigned threads,
                           const char* matrix_path, int* all_passed, char** out) {
  return guarded([&] {
    require(scenario, "scenario");
    require(all_passed, "all_passed");
    emclab::VerifyOptions opt;
    opt.seed = seed;
    opt.cap = cap;
    opt.threads = threads;
    if (matrix_path) opt.matrix_path = std::string(matrix_path);
    const auto rep = emclab::run_verification(scenario, opt);
    *all_passed = rep.all_passed ? 1 : 0;
    put(out, emclab::render(emclab::verify_to_json(rep)));
  });
}

}  // extern "C"
