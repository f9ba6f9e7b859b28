#include "emclab/scenarios.hpp"

#include "emclab/errors.hpp"

namespace emclab {
namespace {

nlohmann::json second_order_law() {
  // Context (x, y): the next state repeats x with probability 0.9.
  return nlohmann::json::array({
      {{"context", {0, 0}}, {"next", {0.9, 0.1}}},
      {{"context", {0, 1}}, {"next", {0.9, 0.1}}},
      {{"context", {1, 0}}, {"next", {0.1, 0.9}}},
      {{"context", {1, 1}}, {"next", {0.1, 0.9}}},
  });
}

}  // namespace

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names{"markov2", "secondorder", "reinforced", "regime"};
  return names;
}

nlohmann::json scenario_spec(std::string_view name) {
  if (name == "markov2") {
    return {{"kind", "memoryless"},
            {"labels", {"idle", "busy"}},
            {"initial", {1.0, 0.0}},
            {"transition", {{0.9, 0.1}, {0.2, 0.8}}}};
  }
  if (name == "secondorder") {
    return {{"kind", "kth_order"},
            {"labels", {"0", "1"}},
            {"order", 2},
            {"law", second_order_law()},
            {"initial_joint", nlohmann::json::array({
                                  {{"prefix", {0, 0}}, {"p", 0.4}},
                                  {{"prefix", {0, 1}}, {"p", 0.4}},
                                  {{"prefix", {1, 0}}, {"p", 0.1}},
                                  {{"prefix", {1, 1}}, {"p", 0.1}},
                              })}};
  }
  if (name == "secondorder-stationary") {
    return {{"kind", "kth_order"},
            {"labels", {"0", "1"}},
            {"order", 2},
            {"law", second_order_law()},
            {"initial_joint", "stationary"}};
  }
  if (name == "reinforced") {
    return {{"kind", "reinforced"},
            {"labels", {"0", "1"}},
            {"initial", {0.5, 0.5}},
            {"base", {{0.7, 0.3}, {0.4, 0.6}}},
            {"beta", 1.0}};
  }
  if (name == "regime") {
    return {{"kind", "regime_switch"},
            {"labels", {"low", "mid", "high"}},
            {"initial", {0.5, 0.3, 0.2}},
            {"regime_chain", {{0.95, 0.05}, {0.1, 0.9}}},
            {"initial_regime", {0.5, 0.5}},
            {"regimes",
             {{{0.8, 0.15, 0.05}, {0.3, 0.6, 0.1}, {0.2, 0.3, 0.5}},
              {{0.2, 0.3, 0.5}, {0.1, 0.3, 0.6}, {0.05, 0.15, 0.8}}}}};
  }
  throw ValidationError("scenarios", "unknown scenario '" + std::string(name) + "'");
}

ProcessModel builtin_scenario(std::string_view name) { return build_model(scenario_spec(name)); }

}  // namespace emclab
