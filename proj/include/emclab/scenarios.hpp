#pragma once

// Named model presets. Their parameters are documented in docs/scenarios.md
// and shipped as JSON under scenarios/.
//
//   markov2                 two-state Markov chain P = [[0.9,0.1],[0.2,0.8]], X_0 = idle
//   secondorder             order-2 law "repeat the state seen two steps ago
//                           w.p. 0.9", started from a skewed pair law
//   secondorder-stationary  same law, started from the stationary pair law
//   reinforced              two-state reinforced chain, beta = 1
//   regime                  three observed states driven by two hidden regimes

#include <string>
#include <string_view>
#include <vector>

#include "emclab/process.hpp"
#include "json.hpp"

namespace emclab {

/// The four primary presets (without the stationary variant).
const std::vector<std::string>& scenario_names();

/// Throws ValidationError for an unknown name.
nlohmann::json scenario_spec(std::string_view name);
ProcessModel builtin_scenario(std::string_view name);

}  // namespace emclab
