#include "emclab/process.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <sstream>
#include <thread>

#include "emclab/errors.hpp"
#include "emclab/io.hpp"

namespace emclab {
namespace {

constexpr std::string_view kModule = "process-zoo";

std::size_t ipow(std::size_t base, unsigned exp) {
  std::size_t r = 1;
  for (unsigned i = 0; i < exp; ++i) r *= base;
  return r;
}

// Law of the first L states for L = 0..order, from the initial joint.
std::vector<std::vector<double>> prefix_marginals(std::size_t n, unsigned order,
                                                  const ProbDist& joint) {
  std::vector<std::vector<double>> out(order + 1);
  out[order].assign(joint.weights().begin(), joint.weights().end());
  for (unsigned len = order; len > 0; --len) {
    const auto& longer = out[len];
    std::vector<double> shorter(longer.size() / n, 0.0);
    for (std::size_t code = 0; code < longer.size(); ++code) shorter[code / n] += longer[code];
    out[len - 1] = std::move(shorter);
  }
  return out;
}

std::size_t context_code(std::span<const State> states, std::size_t n) {
  std::size_t code = 0;
  for (State s : states) code = code * n + s;
  return code;
}

ProbDist reinforced_law(const ReinforcedParams& p, std::span<const State> history,
                        std::span<const std::size_t> visits) {
  const std::size_t n = p.base.size();
  const double len = static_cast<double>(history.size());
  auto row = p.base.row(history.back());
  std::vector<double> w(n);
  for (std::size_t b = 0; b < n; ++b) {
    w[b] = row[b] * (1.0 + p.beta * static_cast<double>(visits[b]) / len);
  }
  return ProbDist::normalize(w);
}

// Pr(regime at time t | observed states 0..t), advanced one observation.
std::vector<double> regime_filter_step(const RegimeSwitchParams& p, std::span<const double> alpha,
                                       State from, State to) {
  const std::size_t r = alpha.size();
  std::vector<double> next(r, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < r; ++i) {
    const double w = alpha[i] * p.per_regime[i](from, to);
    if (w == 0.0) continue;
    for (std::size_t j = 0; j < r; ++j) next[j] += w * p.regime_chain(i, j);
  }
  for (double x : next) total += x;
  if (!(total > 0.0)) return std::vector<double>(r, 1.0 / static_cast<double>(r));
  for (double& x : next) x /= total;
  return next;
}

ProbDist regime_law(const RegimeSwitchParams& p, std::span<const double> alpha, State last) {
  const std::size_t n = p.per_regime.front().size();
  std::vector<double> w(n, 0.0);
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    auto row = p.per_regime[i].row(last);
    for (std::size_t b = 0; b < n; ++b) w[b] += alpha[i] * row[b];
  }
  return ProbDist::normalize(w);
}

// Incremental form of conditional_next used by the samplers. Produces the
// same law as ProcessModel::conditional_next on the accumulated history.
class Stepper {
 public:
  explicit Stepper(const ProcessModel& model) : model_(model), visits_(model.size(), 0) {
    if (auto* rs = std::get_if<RegimeSwitchParams>(&model.params())) {
      alpha_.assign(rs->initial_regime.weights().begin(), rs->initial_regime.weights().end());
    }
  }

  void push(State s) {
    if (auto* rs = std::get_if<RegimeSwitchParams>(&model_.params()); rs && !history_.empty()) {
      alpha_ = regime_filter_step(*rs, alpha_, history_.back(), s);
    }
    history_.push_back(s);
    ++visits_[s];
  }

  ProbDist next() const {
    return std::visit(
        [&](const auto& p) -> ProbDist {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, MemorylessParams>) {
            return p.transition.row_dist(history_.back());
          } else if constexpr (std::is_same_v<T, KthOrderParams>) {
            if (history_.size() < p.order) return model_.conditional_next(history_);
            const std::span<const State> h(history_);
            return p.law[context_code(h.subspan(h.size() - p.order), model_.size())];
          } else if constexpr (std::is_same_v<T, ReinforcedParams>) {
            return reinforced_law(p, history_, visits_);
          } else if constexpr (std::is_same_v<T, ScheduledMarkovParams>) {
            return p.schedule.at(history_.size() - 1).row_dist(history_.back());
          } else {
            return regime_law(p, alpha_, history_.back());
          }
        },
        model_.params());
  }

  const std::vector<State>& history() const { return history_; }

 private:
  const ProcessModel& model_;
  std::vector<State> history_;
  std::vector<std::size_t> visits_;
  std::vector<double> alpha_;
};

State draw(std::span<const double> weights, std::mt19937_64& rng) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  double acc = 0.0;
  State last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    last_positive = static_cast<State>(i);
    acc += weights[i];
    if (u < acc) return static_cast<State>(i);
  }
  return last_positive;
}

std::string hex64(std::uint64_t x) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, x >>= 4) s[static_cast<std::size_t>(i)] = digits[x & 0xF];
  return s;
}

template <typename F>
auto at_location(const std::string& where, F&& f) {
  try {
    return f();
  } catch (const ValidationError& e) {
    throw ValidationError(kModule, where + ": " + e.detail());
  }
}

State parse_state(const nlohmann::json& v, const StateSpace& space, const std::string& where) {
  if (v.is_string()) return at_location(where, [&] { return space.index_of(v.get<std::string>()); });
  if (v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0)) {
    auto s = v.get<std::uint64_t>();
    if (s >= space.size()) throw ValidationError(kModule, where + ": state index out of range");
    return static_cast<State>(s);
  }
  throw ValidationError(kModule, where + ": state must be a label or a nonnegative index");
}

std::vector<State> parse_states(const nlohmann::json& v, const StateSpace& space,
                                const std::string& where, std::size_t expected) {
  if (!v.is_array() || v.size() != expected) {
    throw ValidationError(kModule, where + ": expected an array of " + std::to_string(expected) +
                                       " states");
  }
  std::vector<State> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(parse_state(v[i], space, where + "[" + std::to_string(i) + "]"));
  }
  return out;
}

const nlohmann::json& field(const nlohmann::json& spec, const char* name) {
  if (!spec.contains(name)) {
    throw ValidationError(kModule, std::string("model specification lacks \"") + name + "\"");
  }
  return spec.at(name);
}

}  // namespace

// ProcessModel

ProcessModel::ProcessModel(StateSpace space, ProbDist initial, ModelParams params)
    : space_(std::move(space)), initial_(std::move(initial)), params_(std::move(params)) {
  if (auto* k = std::get_if<KthOrderParams>(&params_)) {
    prefix_marginals_ = prefix_marginals(space_.size(), k->order, k->initial_joint);
  }
}

ProcessModel ProcessModel::memoryless(StateSpace space, ProbDist initial, StochasticMatrix p) {
  if (p.size() != space.size() || initial.size() != space.size()) {
    throw ValidationError(kModule, "memoryless: dimension mismatch between states, initial law "
                                   "and transition matrix");
  }
  return ProcessModel(std::move(space), std::move(initial), MemorylessParams{std::move(p)});
}

ProcessModel ProcessModel::kth_order(StateSpace space, unsigned order, std::vector<ProbDist> law,
                                     ProbDist initial_joint) {
  const std::size_t n = space.size();
  if (order < 2) throw ValidationError(kModule, "kth_order: order must be at least 2");
  const std::size_t contexts = ipow(n, order);
  if (law.size() != contexts) {
    throw ValidationError(kModule, "kth_order: law has " + std::to_string(law.size()) +
                                       " contexts, expected " + std::to_string(contexts));
  }
  for (std::size_t c = 0; c < contexts; ++c) {
    if (law[c].size() != n) {
      throw ValidationError(kModule, "kth_order: law for context " + std::to_string(c) +
                                         " has wrong dimension");
    }
  }
  if (initial_joint.size() != contexts) {
    throw ValidationError(kModule, "kth_order: initial joint must cover n^order prefixes");
  }
  auto marg = prefix_marginals(n, order, initial_joint);
  auto initial = ProbDist::normalize(marg[1]);
  return ProcessModel(std::move(space), std::move(initial),
                      KthOrderParams{order, std::move(law), std::move(initial_joint)});
}

ProcessModel ProcessModel::reinforced(StateSpace space, ProbDist initial, StochasticMatrix base,
                                      double beta) {
  if (base.size() != space.size() || initial.size() != space.size()) {
    throw ValidationError(kModule, "reinforced: dimension mismatch");
  }
  if (!(beta >= 0.0) || !std::isfinite(beta)) {
    throw ValidationError(kModule, "reinforced: beta must be finite and >= 0");
  }
  return ProcessModel(std::move(space), std::move(initial),
                      ReinforcedParams{std::move(base), beta});
}

ProcessModel ProcessModel::regime_switch(StateSpace space, ProbDist initial,
                                         StochasticMatrix regime_chain, ProbDist initial_regime,
                                         std::vector<StochasticMatrix> per_regime) {
  const std::size_t n = space.size();
  if (initial.size() != n) throw ValidationError(kModule, "regime_switch: initial law dimension");
  if (per_regime.empty()) throw ValidationError(kModule, "regime_switch: no regimes");
  if (regime_chain.size() != per_regime.size() || initial_regime.size() != per_regime.size()) {
    throw ValidationError(kModule, "regime_switch: regime chain does not match regime count");
  }
  for (std::size_t i = 0; i < per_regime.size(); ++i) {
    if (per_regime[i].size() != n) {
      throw ValidationError(kModule,
                            "regime_switch: regime " + std::to_string(i) + " matrix dimension");
    }
  }
  return ProcessModel(std::move(space), std::move(initial),
                      RegimeSwitchParams{std::move(regime_chain), std::move(initial_regime),
                                         std::move(per_regime)});
}

ProcessModel ProcessModel::markov_schedule(StateSpace space, ProbDist initial,
                                           MatrixSchedule schedule) {
  if (schedule.size() != space.size() || initial.size() != space.size()) {
    throw ValidationError(kModule, "markov_schedule: dimension mismatch");
  }
  return ProcessModel(std::move(space), std::move(initial),
                      ScheduledMarkovParams{std::move(schedule)});
}

std::string_view ProcessModel::kind() const noexcept {
  switch (params_.index()) {
    case 0: return "memoryless";
    case 1: return "kth_order";
    case 2: return "reinforced";
    case 3: return "regime_switch";
    default: return "markov_schedule";
  }
}

ProbDist ProcessModel::conditional_next(std::span<const State> history) const {
  if (history.empty()) throw ValidationError(kModule, "conditional_next: empty history");
  const std::size_t n = size();
  for (std::size_t i = 0; i < history.size(); ++i) {
    if (history[i] >= n) {
      throw ValidationError(kModule, "conditional_next: state " + std::to_string(history[i]) +
                                         " at position " + std::to_string(i) + " out of range");
    }
  }
  return std::visit(
      [&](const auto& p) -> ProbDist {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, MemorylessParams>) {
          return p.transition.row_dist(history.back());
        } else if constexpr (std::is_same_v<T, KthOrderParams>) {
          if (history.size() >= p.order) {
            return p.law[context_code(history.subspan(history.size() - p.order), n)];
          }
          const std::size_t len = history.size();
          const std::size_t code = context_code(history, n);
          const double denom = prefix_marginals_[len][code];
          if (!(denom > 0.0)) return ProbDist::uniform(n);
          std::vector<double> w(n);
          for (std::size_t b = 0; b < n; ++b) w[b] = prefix_marginals_[len + 1][code * n + b];
          return ProbDist::normalize(w);
        } else if constexpr (std::is_same_v<T, ReinforcedParams>) {
          std::vector<std::size_t> visits(n, 0);
          for (State s : history) ++visits[s];
          return reinforced_law(p, history, visits);
        } else if constexpr (std::is_same_v<T, ScheduledMarkovParams>) {
          return p.schedule.at(history.size() - 1).row_dist(history.back());
        } else {
          std::vector<double> alpha(p.initial_regime.weights().begin(),
                                    p.initial_regime.weights().end());
          for (std::size_t t = 0; t + 1 < history.size(); ++t) {
            alpha = regime_filter_step(p, alpha, history[t], history[t + 1]);
          }
          return regime_law(p, alpha, history.back());
        }
      },
      params_);
}

ProcessModel ProcessModel::with_initial(const ProbDist& initial) const {
  if (initial.size() != size()) throw ValidationError(kModule, "with_initial: dimension mismatch");
  if (auto* k = std::get_if<KthOrderParams>(&params_)) {
    const std::size_t n = size();
    const std::size_t contexts = k->initial_joint.size();
    const std::size_t tail = contexts / n;
    std::vector<double> joint(contexts, 0.0);
    for (std::size_t code = 0; code < contexts; ++code) {
      const std::size_t first = code / tail;
      const double marg = initial_[static_cast<State>(first)];
      if (marg > 0.0) {
        joint[code] = k->initial_joint[static_cast<State>(code)] * initial[static_cast<State>(first)] / marg;
      } else {
        // No conditional to keep: spread the new mass uniformly over the rest of the prefix.
        joint[code] = initial[static_cast<State>(first)] / static_cast<double>(tail);
      }
    }
    return kth_order(space_, k->order, k->law, ProbDist::normalize(joint));
  }
  ProcessModel copy = *this;
  copy.initial_ = initial;
  return copy;
}

std::string ProcessModel::fingerprint() const {
  const std::string canonical = model_to_json(*this).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return hex64(h);
}

ProbDist conditional_next(const ProcessModel& model, const Trajectory& history) {
  if (history.origin != 0) {
    throw ValidationError(kModule, "conditional_next: history must start at time 0");
  }
  return model.conditional_next(history.states);
}

ProbDist stationary_prefix_joint(std::size_t n, unsigned order, const std::vector<ProbDist>& law) {
  const std::size_t contexts = ipow(n, order);
  if (law.size() != contexts) throw ValidationError(kModule, "stationary_prefix_joint: law size");
  const std::size_t tail = contexts / n;
  std::vector<double> cur(contexts, 1.0 / static_cast<double>(contexts));
  std::vector<double> next(contexts);
  constexpr int kMaxIterations = 200000;
  for (int it = 0; it < kMaxIterations; ++it) {
    // Lazy step (I + Q) / 2: same fixed point, no periodic oscillation.
    for (std::size_t c = 0; c < contexts; ++c) next[c] = 0.5 * cur[c];
    for (std::size_t c = 0; c < contexts; ++c) {
      if (cur[c] == 0.0) continue;
      const std::size_t shifted = (c % tail) * n;
      for (std::size_t b = 0; b < n; ++b) {
        next[shifted + b] += 0.5 * cur[c] * law[c][static_cast<State>(b)];
      }
    }
    double change = 0.0;
    for (std::size_t c = 0; c < contexts; ++c) change = std::max(change, std::abs(next[c] - cur[c]));
    cur.swap(next);
    if (change <= 1e-17) break;
  }
  return ProbDist::normalize(cur);
}

// Model specification parsing

namespace {

ProcessModel build_model_impl(const nlohmann::json& spec) {
  if (!spec.is_object()) throw ValidationError(kModule, "model specification must be an object");
  const std::string kind = field(spec, "kind").get<std::string>();

  auto space_for = [&](std::size_t n) {
    if (!spec.contains("labels")) return StateSpace::indexed(n);
    auto labels = spec.at("labels").get<std::vector<std::string>>();
    if (labels.size() != n) {
      throw ValidationError(kModule, "labels: expected " + std::to_string(n) + " labels");
    }
    return at_location("labels", [&] { return StateSpace(std::move(labels)); });
  };
  auto matrix = [&](const nlohmann::json& j, const std::string& where) {
    return at_location(where, [&] { return matrix_from_rows_json(j, where); });
  };
  auto dist = [&](const nlohmann::json& j, const std::string& where) {
    return at_location(where, [&] { return dist_from_array_json(j, where); });
  };

  if (kind == "memoryless") {
    auto p = matrix(field(spec, "transition"), "transition");
    auto space = space_for(p.size());
    auto init = dist(field(spec, "initial"), "initial");
    return ProcessModel::memoryless(std::move(space), std::move(init), std::move(p));
  }
  if (kind == "reinforced") {
    auto base = matrix(field(spec, "base"), "base");
    auto space = space_for(base.size());
    auto init = dist(field(spec, "initial"), "initial");
    const auto& beta = field(spec, "beta");
    if (!beta.is_number()) throw ValidationError(kModule, "beta must be a number");
    return ProcessModel::reinforced(std::move(space), std::move(init), std::move(base),
                                    beta.get<double>());
  }
  if (kind == "regime_switch") {
    auto chain = matrix(field(spec, "regime_chain"), "regime_chain");
    auto init_regime = dist(field(spec, "initial_regime"), "initial_regime");
    const auto& regimes = field(spec, "regimes");
    if (!regimes.is_array() || regimes.empty()) {
      throw ValidationError(kModule, "regimes must be a nonempty array of matrices");
    }
    std::vector<StochasticMatrix> per;
    for (std::size_t i = 0; i < regimes.size(); ++i) {
      per.push_back(matrix(regimes[i], "regimes[" + std::to_string(i) + "]"));
    }
    auto space = space_for(per.front().size());
    auto init = dist(field(spec, "initial"), "initial");
    return ProcessModel::regime_switch(std::move(space), std::move(init), std::move(chain),
                                       std::move(init_regime), std::move(per));
  }
  if (kind == "markov_schedule") {
    const auto& slices = field(spec, "schedule");
    if (!slices.is_array() || slices.empty()) {
      throw ValidationError(kModule, "schedule must be a nonempty array of matrices");
    }
    std::vector<StochasticMatrix> mats;
    for (std::size_t i = 0; i < slices.size(); ++i) {
      mats.push_back(matrix(slices[i], "schedule[" + std::to_string(i) + "]"));
    }
    const bool homogeneous = spec.value("homogeneous", false);
    if (homogeneous && mats.size() != 1) {
      throw ValidationError(kModule, "schedule: a homogeneous schedule holds exactly one matrix");
    }
    auto space = space_for(mats.front().size());
    auto init = dist(field(spec, "initial"), "initial");
    auto sched = homogeneous ? MatrixSchedule::homogeneous(std::move(mats.front()))
                             : MatrixSchedule::time_varying(std::move(mats));
    return ProcessModel::markov_schedule(std::move(space), std::move(init), std::move(sched));
  }
  if (kind == "kth_order") {
    const unsigned order = field(spec, "order").get<unsigned>();
    if (order < 2) throw ValidationError(kModule, "order: must be at least 2");
    std::size_t n = 0;
    if (spec.contains("labels")) {
      n = spec.at("labels").size();
    } else {
      n = field(spec, "num_states").get<std::size_t>();
    }
    auto space = space_for(n);
    const std::size_t contexts = ipow(n, order);
    const auto& law_json = field(spec, "law");
    if (!law_json.is_array()) throw ValidationError(kModule, "law must be an array");
    std::vector<std::optional<ProbDist>> table(contexts);
    for (std::size_t i = 0; i < law_json.size(); ++i) {
      const std::string where = "law[" + std::to_string(i) + "]";
      const auto& entry = law_json[i];
      if (!entry.is_object() || !entry.contains("context") || !entry.contains("next")) {
        throw ValidationError(kModule, where + ": expected {\"context\", \"next\"}");
      }
      auto ctx = parse_states(entry.at("context"), space, where + ".context", order);
      const std::size_t code = context_code(ctx, n);
      if (table[code]) throw ValidationError(kModule, where + ": duplicate context");
      table[code] = dist(entry.at("next"), where + ".next");
      if (table[code]->size() != n) {
        throw ValidationError(kModule, where + ".next: expected " + std::to_string(n) + " weights");
      }
    }
    std::vector<ProbDist> law;
    for (std::size_t code = 0; code < contexts; ++code) {
      if (!table[code]) {
        std::string ctx;
        std::size_t c = code;
        std::vector<State> states(order);
        for (unsigned j = order; j > 0; --j, c /= n) states[j - 1] = static_cast<State>(c % n);
        for (unsigned j = 0; j < order; ++j) ctx += (j ? "," : "") + space.label(states[j]);
        throw ValidationError(kModule, "law: missing context (" + ctx + ")");
      }
      law.push_back(*table[code]);
    }
    const auto& init_json = field(spec, "initial_joint");
    ProbDist joint = ProbDist::uniform(contexts);
    if (init_json.is_string()) {
      if (init_json.get<std::string>() != "stationary") {
        throw ValidationError(kModule, "initial_joint: only the string \"stationary\" is accepted");
      }
      joint = stationary_prefix_joint(n, order, law);
    } else {
      if (!init_json.is_array()) {
        throw ValidationError(kModule, "initial_joint must be \"stationary\" or an array");
      }
      std::vector<double> w(contexts, 0.0);
      for (std::size_t i = 0; i < init_json.size(); ++i) {
        const std::string where = "initial_joint[" + std::to_string(i) + "]";
        const auto& entry = init_json[i];
        if (!entry.is_object() || !entry.contains("prefix") || !entry.contains("p")) {
          throw ValidationError(kModule, where + ": expected {\"prefix\", \"p\"}");
        }
        auto prefix = parse_states(entry.at("prefix"), space, where + ".prefix", order);
        w[context_code(prefix, n)] += entry.at("p").get<double>();
      }
      joint = at_location("initial_joint", [&] { return ProbDist::strict(std::move(w)); });
    }
    return ProcessModel::kth_order(std::move(space), order, std::move(law), std::move(joint));
  }
  throw ValidationError(kModule, "unknown model kind '" + kind + "'");
}

}  // namespace

ProcessModel build_model(const nlohmann::json& spec) {
  try {
    return build_model_impl(spec);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(kModule, std::string("malformed model specification: ") + e.what());
  }
}

ProcessModel build_model_from_file(const std::string& path) {
  return build_model(parse_json(read_file(path), path));
}

nlohmann::json model_to_json(const ProcessModel& model) {
  const auto& space = model.space();
  auto rows = [](const StochasticMatrix& m) { return matrix_to_json(StateSpace::indexed(m.size()), m)["rows"]; };
  auto weights = [](const ProbDist& d) {
    return std::vector<double>(d.weights().begin(), d.weights().end());
  };
  nlohmann::json j;
  j["kind"] = model.kind();
  j["labels"] = space.labels();
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, MemorylessParams>) {
          j["initial"] = weights(model.initial());
          j["transition"] = rows(p.transition);
        } else if constexpr (std::is_same_v<T, KthOrderParams>) {
          const std::size_t n = space.size();
          j["order"] = p.order;
          nlohmann::json law = nlohmann::json::array();
          nlohmann::json joint = nlohmann::json::array();
          for (std::size_t code = 0; code < p.law.size(); ++code) {
            std::vector<State> ctx(p.order);
            std::size_t c = code;
            for (unsigned i = p.order; i > 0; --i, c /= n) ctx[i - 1] = static_cast<State>(c % n);
            law.push_back({{"context", ctx}, {"next", weights(p.law[code])}});
            const double w = p.initial_joint[static_cast<State>(code)];
            if (w > 0.0) joint.push_back({{"prefix", ctx}, {"p", w}});
          }
          j["law"] = std::move(law);
          j["initial_joint"] = std::move(joint);
        } else if constexpr (std::is_same_v<T, ReinforcedParams>) {
          j["initial"] = weights(model.initial());
          j["base"] = rows(p.base);
          j["beta"] = p.beta;
        } else if constexpr (std::is_same_v<T, ScheduledMarkovParams>) {
          j["initial"] = weights(model.initial());
          j["homogeneous"] = p.schedule.is_homogeneous();
          nlohmann::json slices = nlohmann::json::array();
          for (const auto& m : p.schedule.matrices()) slices.push_back(rows(m));
          j["schedule"] = std::move(slices);
        } else {
          j["initial"] = weights(model.initial());
          j["regime_chain"] = rows(p.regime_chain);
          j["initial_regime"] = weights(p.initial_regime);
          nlohmann::json regimes = nlohmann::json::array();
          for (const auto& m : p.per_regime) regimes.push_back(rows(m));
          j["regimes"] = std::move(regimes);
        }
      },
      model.params());
  return j;
}

// Sampling

std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return mix64(master + 0x9E3779B97F4A7C15ULL * (index + 1));
}

Trajectory sample_trajectory(const ProcessModel& model, std::size_t horizon, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Stepper stepper(model);
  stepper.push(draw(model.initial().weights(), rng));
  for (std::size_t t = 0; t < horizon; ++t) {
    const ProbDist next = stepper.next();
    stepper.push(draw(next.weights(), rng));
  }
  return Trajectory{stepper.history(), 0};
}

TrajectoryEnsemble sample_ensemble(const ProcessModel& model, std::size_t horizon,
                                   std::size_t count, std::uint64_t master_seed,
                                   unsigned threads) {
  if (count == 0) throw ValidationError(kModule, "sample_ensemble: count must be at least 1");
  TrajectoryEnsemble e;
  e.master_seed = master_seed;
  e.horizon = horizon;
  e.fingerprint = model.fingerprint();
  e.labels = model.space().labels();
  e.trajectories.resize(count);
  e.seeds.resize(count);
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      e.seeds[i] = derive_seed(master_seed, i);
      e.trajectories[i] = sample_trajectory(model, horizon, e.seeds[i]);
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
  if (threads == 1) {
    work(0, count);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (count + threads - 1) / threads;
    for (unsigned k = 0; k < threads; ++k) {
      const std::size_t b = k * chunk;
      const std::size_t en = std::min(count, b + chunk);
      if (b < en) pool.emplace_back(work, b, en);
    }
  }
  return e;
}

std::string ensemble_to_jsonl(const TrajectoryEnsemble& ensemble) {
  std::string out;
  nlohmann::json header = {{"type", "header"},
                           {"fingerprint", ensemble.fingerprint},
                           {"horizon", ensemble.horizon},
                           {"master_seed", ensemble.master_seed},
                           {"count", ensemble.size()},
                           {"labels", ensemble.labels}};
  out += header.dump();
  out += '\n';
  for (std::size_t i = 0; i < ensemble.size(); ++i) {
    nlohmann::json line = {{"seed", ensemble.seeds[i]},
                           {"states", ensemble.trajectories[i].states}};
    out += line.dump();
    out += '\n';
  }
  return out;
}

TrajectoryEnsemble ensemble_from_jsonl(std::string_view text) {
  TrajectoryEnsemble e;
  std::istringstream in{std::string(text)};
  std::string line;
  bool have_header = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto j = parse_json(line, "ensemble line " + std::to_string(line_no));
    try {
    if (!have_header) {
      if (j.value("type", "") != "header") {
        throw ValidationError(kModule, "ensemble: first line must be the header");
      }
      e.fingerprint = j.at("fingerprint").get<std::string>();
      e.horizon = j.at("horizon").get<std::size_t>();
      e.master_seed = j.at("master_seed").get<std::uint64_t>();
      e.labels = j.at("labels").get<std::vector<std::string>>();
      have_header = true;
      continue;
    }
    Trajectory t{j.at("states").get<std::vector<State>>(), 0};
    if (t.states.size() != e.horizon + 1) {
      throw ValidationError(kModule, "ensemble line " + std::to_string(line_no) +
                                         ": trajectory length differs from horizon + 1");
    }
    validate_trajectory(t, e.labels.size(), kModule);
    e.seeds.push_back(j.at("seed").get<std::uint64_t>());
    e.trajectories.push_back(std::move(t));
    } catch (const nlohmann::json::exception& ex) {
      throw ValidationError(kModule, "ensemble line " + std::to_string(line_no) + ": " + ex.what());
    }
  }
  if (!have_header) throw ValidationError(kModule, "ensemble: missing header line");
  if (e.trajectories.empty()) throw ValidationError(kModule, "ensemble: no trajectories");
  return e;
}

}  // namespace emclab
