#pragma once

// JSON and CSV forms of the state-core types, plus small file helpers.
//
//   matrix:        {"labels": [...], "rows": [[...], ...]}
//   distribution:  {"labels": [...], "weights": [...]}
//
// "labels" may be omitted on input, in which case states are named 0..n-1.
// Reading is strict: nothing is renormalized.

#include <string>
#include <string_view>

#include "emclab/core.hpp"
#include "json.hpp"

namespace emclab {

struct LabeledMatrix {
  StateSpace space;
  StochasticMatrix matrix;
};

struct LabeledDist {
  StateSpace space;
  ProbDist dist;
};

nlohmann::json matrix_to_json(const StateSpace& space, const StochasticMatrix& matrix);
LabeledMatrix matrix_from_json(const nlohmann::json& j);
nlohmann::json dist_to_json(const StateSpace& space, const ProbDist& dist);
LabeledDist dist_from_json(const nlohmann::json& j);

/// Parses a bare array of arrays into a strict stochastic matrix.
StochasticMatrix matrix_from_rows_json(const nlohmann::json& rows, std::string_view where);
/// Parses a bare array of numbers into a strict distribution.
ProbDist dist_from_array_json(const nlohmann::json& weights, std::string_view where);

/// One matrix row per line, comma separated, 17 significant digits.
std::string matrix_to_csv(const StochasticMatrix& matrix);

/// printf("%.17g"): round-trips every double.
std::string format_double(double x);

nlohmann::json parse_json(std::string_view text, std::string_view what);
std::string read_file(const std::string& path);
/// Writes to a sibling temporary and renames over the target.
void write_file_atomic(const std::string& path, std::string_view content);

}  // namespace emclab
