// emclab command-line workbench. Talks to the library only through the C API.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "emclab/emc.h"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::size_t kDefaultCap = 2'000'000;
constexpr const char* kOutEnv = "EMCLAB_OUT_DIR";

struct Failure {
  int code;
  std::string message;
};

[[noreturn]] void raise(int code, std::string message) { throw Failure{code, std::move(message)}; }

[[noreturn]] void raise_last(emc_status s) { raise(static_cast<int>(s), emc_last_error()); }

void check(emc_status s) {
  if (s != EMC_OK) raise_last(s);
}

struct CString {
  char* p = nullptr;
  ~CString() { emc_string_free(p); }
  std::string str() const { return p ? std::string(p) : std::string(); }
};

using ModelPtr = std::unique_ptr<emc_model, decltype(&emc_model_free)>;
using MatrixPtr = std::unique_ptr<emc_matrix, decltype(&emc_matrix_free)>;

// Flags as parsed; empty optionals fall back to the config file, then defaults.
struct Flags {
  std::optional<std::string> config, model, scenario, matrix, input, out, censor, mode;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> horizon, samples, cap, t_max, hits;
  std::optional<unsigned> threads;
  std::optional<double> smoothing;
  bool exact = false, monte_carlo = false, require_ergodic = false, per_time = false;
};

struct Resolved {
  std::string command;
  std::optional<std::string> model, scenario, matrix, input;
  std::string out;
  std::uint64_t seed = 0;
  std::size_t horizon = 0, samples = 0, cap = kDefaultCap, t_max = 50, hits = 5;
  unsigned threads = 1;
  double smoothing = 0.0;
  std::string mode = "exact";
  std::vector<std::string> censor;
  bool require_ergodic = false, per_time = false;
};

const std::vector<std::string> kConfigKeys = {
    "model", "scenario", "matrix",  "input", "out",     "seed",     "horizon",         "samples",
    "cap",   "t_max",    "hits",    "threads", "smoothing", "mode", "censor", "require_ergodic",
    "per_time"};

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(1, "cli: cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_atomic(const fs::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) raise(1, "cli: cannot write '" + tmp.string() + "'");
    out << content;
    if (!out.flush()) raise(1, "cli: write to '" + tmp.string() + "' failed");
  }
  fs::rename(tmp, path, ec);
  if (ec) raise(1, "cli: cannot rename onto '" + path.string() + "': " + ec.message());
}

std::vector<std::string> split_labels(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, ',')) {
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

template <typename T>
T config_value(const json& cfg, const char* key, const T& fallback) {
  if (!cfg.contains(key)) return fallback;
  try {
    return cfg.at(key).get<T>();
  } catch (const json::exception&) {
    raise(1, std::string("cli: config key '") + key + "' has the wrong type");
  }
}

// Config-file paths are taken relative to the config file.
std::optional<std::string> path_value(const std::optional<std::string>& flag, const json& cfg,
                                      const char* key, const fs::path& base) {
  if (flag) return fs::absolute(*flag).lexically_normal().string();
  if (!cfg.contains(key)) return std::nullopt;
  fs::path p = config_value<std::string>(cfg, key, "");
  if (p.is_relative()) p = base / p;
  return fs::absolute(p).lexically_normal().string();
}

Resolved resolve(const std::string& command, const Flags& f) {
  json cfg = json::object();
  fs::path base = fs::current_path();
  if (f.config) {
    try {
      cfg = json::parse(read_text(*f.config));
    } catch (const json::parse_error& e) {
      raise(1, "cli: config '" + *f.config + "' is not valid JSON: " + e.what());
    }
    if (!cfg.is_object()) raise(1, "cli: config '" + *f.config + "' must be a JSON object");
    for (const auto& [k, v] : cfg.items()) {
      if (std::find(kConfigKeys.begin(), kConfigKeys.end(), k) == kConfigKeys.end()) {
        raise(1, "cli: unknown config key '" + k + "'");
      }
    }
    base = fs::absolute(*f.config).parent_path();
  }

  Resolved r;
  r.command = command;
  r.model = path_value(f.model, cfg, "model", base);
  r.matrix = path_value(f.matrix, cfg, "matrix", base);
  r.input = path_value(f.input, cfg, "input", base);
  r.scenario = f.scenario ? f.scenario
                          : (cfg.contains("scenario")
                                 ? std::optional<std::string>(config_value<std::string>(cfg, "scenario", ""))
                                 : std::nullopt);

  if (auto p = path_value(f.out, cfg, "out", base)) {
    r.out = *p;
  } else if (const char* env = std::getenv(kOutEnv); env && *env) {
    r.out = fs::absolute(env).lexically_normal().string();
  } else {
    r.out = fs::absolute("emclab-out").lexically_normal().string();
  }

  std::size_t horizon_default = 20, samples_default = 1000;
  if (command == "oracle") horizon_default = 4;
  if (command == "emc") {
    horizon_default = 8;
    samples_default = 100000;
  }
  if (command == "censor") samples_default = 50000;

  r.seed = f.seed.value_or(config_value<std::uint64_t>(cfg, "seed", 0));
  r.horizon = f.horizon.value_or(config_value<std::size_t>(cfg, "horizon", horizon_default));
  r.samples = f.samples.value_or(config_value<std::size_t>(cfg, "samples", samples_default));
  r.cap = f.cap.value_or(config_value<std::size_t>(cfg, "cap", kDefaultCap));
  r.t_max = f.t_max.value_or(config_value<std::size_t>(cfg, "t_max", 50));
  r.hits = f.hits.value_or(config_value<std::size_t>(cfg, "hits", 5));
  r.threads = f.threads.value_or(config_value<unsigned>(cfg, "threads", 1));
  r.smoothing = f.smoothing.value_or(config_value<double>(cfg, "smoothing", 0.0));
  r.require_ergodic = f.require_ergodic || config_value<bool>(cfg, "require_ergodic", false);
  r.per_time = f.per_time || config_value<bool>(cfg, "per_time", false);

  if (f.exact && f.monte_carlo) raise(1, "cli: --exact and --monte-carlo are exclusive");
  if (f.exact) {
    r.mode = "exact";
  } else if (f.monte_carlo) {
    r.mode = "monte-carlo";
  } else {
    r.mode = config_value<std::string>(cfg, "mode", "exact");
  }
  if (r.mode != "exact" && r.mode != "monte-carlo") {
    raise(1, "cli: mode must be 'exact' or 'monte-carlo', got '" + r.mode + "'");
  }

  if (f.censor) {
    r.censor = split_labels(*f.censor);
  } else if (cfg.contains("censor")) {
    const auto& c = cfg.at("censor");
    if (c.is_string()) {
      r.censor = split_labels(c.get<std::string>());
    } else {
      r.censor = config_value<std::vector<std::string>>(cfg, "censor", {});
    }
  }
  if (r.threads == 0) raise(1, "cli: threads must be at least 1");
  return r;
}

json echo(const Resolved& r) {
  json j{{"command", r.command}, {"seed", r.seed}, {"cap", r.cap}, {"out", r.out},
         {"threads", r.threads}};
  auto opt = [&](const char* k, const std::optional<std::string>& v) {
    if (v) j[k] = *v;
  };
  opt("model", r.model);
  opt("scenario", r.scenario);
  opt("matrix", r.matrix);
  opt("input", r.input);
  if (r.command == "simulate") {
    j["horizon"] = r.horizon;
    j["samples"] = r.samples;
  } else if (r.command == "oracle") {
    j["horizon"] = r.horizon;
  } else if (r.command == "emc") {
    j["horizon"] = r.horizon;
    j["mode"] = r.mode;
    if (r.mode == "monte-carlo") j["samples"] = r.samples;
  } else if (r.command == "estimate") {
    j["per_time"] = r.per_time;
    j["smoothing"] = r.smoothing;
  } else if (r.command == "analyze") {
    j["t_max"] = r.t_max;
    j["require_ergodic"] = r.require_ergodic;
  } else if (r.command == "censor") {
    j["censor"] = r.censor;
    j["hits"] = r.hits;
    j["samples"] = r.samples;
  }
  return j;
}

ModelPtr load_model(const Resolved& r) {
  emc_model* m = nullptr;
  if (r.model && r.scenario) raise(1, "cli: pass either a model file or a scenario, not both");
  if (r.model) {
    check(emc_model_from_file(r.model->c_str(), &m));
  } else if (r.scenario) {
    check(emc_model_builtin(r.scenario->c_str(), &m));
  } else {
    raise(1, "cli: no model given (use --model <file> or --scenario <name>)");
  }
  return ModelPtr(m, emc_model_free);
}

std::string fingerprint(const emc_model* m) {
  CString s;
  check(emc_model_fingerprint(m, &s.p));
  return s.str();
}

json parse_report(const CString& s) { return json::parse(s.str()); }

std::string envelope(const Resolved& r, const json& result) {
  json j{{"tool", std::string(emc_version())}, {"command", r.command}, {"config", echo(r)},
         {"result", result}};
  return j.dump(2) + "\n";
}

struct Output {
  std::vector<std::string> written;
  int status = 0;
};

void emit(const Resolved& r, Output& o, const std::string& name, const std::string& content) {
  const fs::path p = fs::path(r.out) / name;
  write_atomic(p, content);
  o.written.push_back(p.string());
}

Output run_simulate(const Resolved& r) {
  auto m = load_model(r);
  CString jsonl;
  check(emc_simulate_jsonl(m.get(), r.horizon, r.samples, r.seed, r.threads, &jsonl.p));
  Output o;
  emit(r, o, "ensemble.jsonl", jsonl.str());
  json result{{"fingerprint", fingerprint(m.get())},
              {"trajectories", r.samples},
              {"horizon", r.horizon},
              {"ensemble", "ensemble.jsonl"}};
  emit(r, o, "simulate.json", envelope(r, result));
  return o;
}

Output run_oracle(const Resolved& r) {
  auto m = load_model(r);
  CString rep, csv;
  check(emc_oracle_json(m.get(), r.horizon, r.cap, &rep.p, &csv.p));
  Output o;
  emit(r, o, "joint.csv", csv.str());
  json result = parse_report(rep);
  result["fingerprint"] = fingerprint(m.get());
  result["joint_table"] = "joint.csv";
  emit(r, o, "oracle.json", envelope(r, result));
  return o;
}

Output run_emc(const Resolved& r) {
  auto m = load_model(r);
  CString rep;
  check(emc_lemma1_json(m.get(), r.horizon, r.mode == "monte-carlo", r.samples, r.seed, r.cap,
                        r.threads, &rep.p));
  json result = parse_report(rep);
  result["fingerprint"] = fingerprint(m.get());
  Output o;
  emit(r, o, "emc.json", envelope(r, result));
  if (!result.at("passed").get<bool>()) o.status = EMC_ERR_VERIFICATION;
  return o;
}

Output run_estimate(const Resolved& r) {
  if (!r.input) raise(1, "cli: estimate needs --input <ensemble.jsonl>");
  const std::string text = read_text(*r.input);
  CString rep;
  check(emc_estimate_json(text.c_str(), r.per_time, r.smoothing, &rep.p));
  json result = parse_report(rep);
  Output o;
  if (!r.per_time) {
    // Plain matrix file, readable by `analyze --matrix`.
    const auto& mj = result.at("matrix");
    json plain{{"labels", mj.at("labels")}, {"rows", mj.at("rows")}};
    emit(r, o, "matrix.json", plain.dump(2) + "\n");
    result["matrix_file"] = "matrix.json";
  }
  emit(r, o, "estimate.json", envelope(r, result));
  return o;
}

MatrixPtr analysis_matrix(const Resolved& r) {
  emc_matrix* mat = nullptr;
  if (r.matrix) {
    if (r.model || r.scenario) raise(1, "cli: pass a matrix or a model, not both");
    check(emc_matrix_from_file(r.matrix->c_str(), &mat));
  } else {
    auto m = load_model(r);
    check(emc_model_first_order(m.get(), 4, r.cap, &mat));
  }
  return MatrixPtr(mat, emc_matrix_free);
}

Output run_analyze(const Resolved& r) {
  auto mat = analysis_matrix(r);
  Output o;
  CString rep, csv;
  const emc_status s = emc_analyze_json(mat.get(), nullptr, r.t_max, r.require_ergodic, &rep.p, &csv.p);
  if (s != EMC_OK) {
    // Still record what the structure looks like before failing.
    const std::string err = emc_last_error();
    CString st;
    if (emc_structure_json(mat.get(), &st.p) == EMC_OK) {
      json result{{"structure", parse_report(st)}, {"error", err}};
      emit(r, o, "analyze.json", envelope(r, result));
    }
    raise(static_cast<int>(s), err);
  }
  json result = parse_report(rep);
  if (csv.p) {
    emit(r, o, "profile.csv", csv.str());
    result["profile_csv"] = "profile.csv";
  }
  emit(r, o, "analyze.json", envelope(r, result));
  return o;
}

Output run_censor(const Resolved& r) {
  if (r.censor.empty()) raise(1, "cli: censor needs --censor label,label,...");
  ModelPtr m(nullptr, emc_model_free);
  if (r.matrix) {
    MatrixPtr mat(nullptr, emc_matrix_free);
    emc_matrix* raw = nullptr;
    check(emc_matrix_from_file(r.matrix->c_str(), &raw));
    mat.reset(raw);
    emc_model* mm = nullptr;
    check(emc_model_from_matrix(mat.get(), nullptr, &mm));
    m.reset(mm);
  } else {
    m = load_model(r);
  }
  std::vector<const char*> members;
  for (const auto& l : r.censor) members.push_back(l.c_str());
  CString rep;
  check(emc_censor_json(m.get(), members.data(), members.size(), r.hits, r.samples, r.seed, r.cap,
                        r.threads, &rep.p));
  json result = parse_report(rep);
  Output o;
  emit(r, o, "censor.json", envelope(r, result));
  if (!result.at("hit_report").at("passed").get<bool>()) o.status = EMC_ERR_VERIFICATION;
  return o;
}

Output run_verify(const Resolved& r) {
  const std::string scenario = r.scenario.value_or("all");
  CString rep;
  int all_passed = 0;
  check(emc_verify_json(scenario.c_str(), r.seed, r.cap, r.threads,
                        r.matrix ? r.matrix->c_str() : nullptr, &all_passed, &rep.p));
  json result = parse_report(rep);
  Output o;
  emit(r, o, "verify.json", envelope(r, result));
  for (const auto& c : result.at("checks")) {
    const bool ok = c.at("passed").get<bool>();
    std::cout << (ok ? "PASS " : "FAIL ") << c.at("scenario").get<std::string>() << " "
              << c.at("name").get<std::string>() << "\n";
    if (!ok) std::cerr << "verify: check '" << c.at("name").get<std::string>() << "' failed: "
                       << c.at("detail").get<std::string>() << "\n";
  }
  if (!all_passed) o.status = EMC_ERR_VERIFICATION;
  return o;
}

std::string timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void append_log(const std::string& out_dir, const std::string& line) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  std::ofstream log(fs::path(out_dir) / "run.log", std::ios::app);
  if (log) log << timestamp() << " " << line << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"emclab: equivalent Markov chains of non-Markov processes"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(emc_version()));

  Flags f;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", f.config, "JSON config file (flags override it)");
    sub->add_option("--seed", f.seed, "Master seed (default 0)");
    sub->add_option("--out", f.out, "Output directory (default $EMCLAB_OUT_DIR or ./emclab-out)");
    sub->add_option("--cap", f.cap, "Enumeration cap in table entries");
    sub->add_option("--threads", f.threads, "Worker threads for sampling");
  };
  auto model_opts = [&](CLI::App* sub) {
    sub->add_option("--model", f.model, "Model specification (JSON)");
    sub->add_option("--scenario", f.scenario, "Built-in scenario name");
  };

  auto* sim = app.add_subcommand("simulate", "Sample a trajectory ensemble (JSONL)");
  common(sim);
  model_opts(sim);
  sim->add_option("--horizon", f.horizon, "Last time index T");
  sim->add_option("--samples", f.samples, "Number of trajectories");

  auto* ora = app.add_subcommand("oracle", "Exact joint table, marginals, P_t and history gaps");
  common(ora);
  model_opts(ora);
  ora->add_option("--horizon", f.horizon, "Last time index T");

  auto* emc = app.add_subcommand("emc", "Equivalent chain marginals vs the parent's");
  common(emc);
  model_opts(emc);
  emc->add_option("--horizon", f.horizon, "Last time index T");
  emc->add_option("--samples", f.samples, "Trajectories in monte-carlo mode");
  emc->add_flag("--exact", f.exact, "Compare against the enumeration oracle");
  emc->add_flag("--monte-carlo", f.monte_carlo, "Compare against sampled marginals");

  auto* est = app.add_subcommand("estimate", "Estimate P (or P_t) from an ensemble");
  common(est);
  est->add_option("--input", f.input, "Ensemble JSONL from `simulate`");
  est->add_flag("--per-time", f.per_time, "Estimate one matrix per time step");
  est->add_option("--smoothing", f.smoothing, "Additive pseudo-count per entry");

  auto* ana = app.add_subcommand("analyze", "Structure, stationary law and convergence profile");
  common(ana);
  model_opts(ana);
  ana->add_option("--matrix", f.matrix, "Transition matrix (JSON)");
  ana->add_option("--t-max", f.t_max, "Profile length");
  ana->add_flag("--require-ergodic", f.require_ergodic, "Fail unless irreducible and aperiodic");

  auto* cen = app.add_subcommand("censor", "Censored chain and A-hit distribution check");
  common(cen);
  model_opts(cen);
  cen->add_option("--matrix", f.matrix, "Transition matrix (JSON) instead of a model");
  cen->add_option("--censor", f.censor, "Comma-separated labels of A");
  cen->add_option("--hits", f.hits, "Number of A-hits checked");
  cen->add_option("--samples", f.samples, "Trajectories");

  auto* ver = app.add_subcommand("verify", "Run the verification checks");
  common(ver);
  ver->add_option("--scenario", f.scenario, "Scenario name or 'all' (default)");
  ver->add_option("--matrix", f.matrix, "Extra matrix file to check");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  std::string out_dir;
  try {
    const Resolved r = resolve(command, f);
    out_dir = r.out;
    Output o;
    if (command == "simulate") o = run_simulate(r);
    else if (command == "oracle") o = run_oracle(r);
    else if (command == "emc") o = run_emc(r);
    else if (command == "estimate") o = run_estimate(r);
    else if (command == "analyze") o = run_analyze(r);
    else if (command == "censor") o = run_censor(r);
    else o = run_verify(r);
    for (const auto& p : o.written) std::cout << "wrote " << p << "\n";
    append_log(r.out, command + " exit " + std::to_string(o.status) + " seed " + std::to_string(r.seed));
    return o.status;
  } catch (const Failure& e) {
    std::cerr << "error: " << e.message << "\n";
    if (!out_dir.empty()) append_log(out_dir, command + " exit " + std::to_string(e.code) + " " + e.message);
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return EMC_ERR_INTERNAL;
  }
}
