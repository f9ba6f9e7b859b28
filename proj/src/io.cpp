#include "emclab/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "emclab/errors.hpp"

namespace emclab {
namespace {

constexpr std::string_view kModule = "state-core";

StateSpace labels_or_indexed(const nlohmann::json& j, std::size_t n) {
  if (!j.contains("labels")) return StateSpace::indexed(n);
  const auto& labels = j.at("labels");
  if (!labels.is_array()) throw ValidationError(kModule, "\"labels\" must be an array");
  std::vector<std::string> out;
  for (const auto& l : labels) {
    if (!l.is_string()) throw ValidationError(kModule, "\"labels\" entries must be strings");
    out.push_back(l.get<std::string>());
  }
  if (out.size() != n) {
    throw ValidationError(kModule, "expected " + std::to_string(n) + " labels, got " +
                                       std::to_string(out.size()));
  }
  return StateSpace(std::move(out));
}

std::vector<double> numbers(const nlohmann::json& arr, std::string_view where) {
  if (!arr.is_array()) throw ValidationError(kModule, std::string(where) + " must be an array");
  std::vector<double> out;
  out.reserve(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) {
      throw ValidationError(kModule, std::string(where) + "[" + std::to_string(i) +
                                         "] is not a number");
    }
    out.push_back(arr[i].get<double>());
  }
  return out;
}

template <typename F>
auto located(std::string_view where, F&& f) {
  try {
    return f();
  } catch (const ValidationError& e) {
    throw ValidationError(kModule, std::string(where) + ": " + e.detail());
  }
}

}  // namespace

StochasticMatrix matrix_from_rows_json(const nlohmann::json& rows, std::string_view where) {
  if (!rows.is_array()) throw ValidationError(kModule, std::string(where) + " must be an array");
  std::vector<std::vector<double>> r;
  for (std::size_t a = 0; a < rows.size(); ++a) {
    r.push_back(numbers(rows[a], std::string(where) + "[" + std::to_string(a) + "]"));
  }
  return located(where, [&] { return StochasticMatrix::from_rows(r); });
}

ProbDist dist_from_array_json(const nlohmann::json& weights, std::string_view where) {
  auto w = numbers(weights, where);
  return located(where, [&] { return ProbDist::strict(std::move(w)); });
}

nlohmann::json matrix_to_json(const StateSpace& space, const StochasticMatrix& matrix) {
  nlohmann::json rows = nlohmann::json::array();
  for (State a = 0; a < matrix.size(); ++a) {
    auto r = matrix.row(a);
    rows.push_back(std::vector<double>(r.begin(), r.end()));
  }
  return {{"labels", space.labels()}, {"rows", rows}};
}

LabeledMatrix matrix_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("rows")) {
    throw ValidationError(kModule, "matrix JSON must be an object with \"rows\"");
  }
  auto m = matrix_from_rows_json(j.at("rows"), "rows");
  auto space = labels_or_indexed(j, m.size());
  return {std::move(space), std::move(m)};
}

nlohmann::json dist_to_json(const StateSpace& space, const ProbDist& dist) {
  return {{"labels", space.labels()},
          {"weights", std::vector<double>(dist.weights().begin(), dist.weights().end())}};
}

LabeledDist dist_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("weights")) {
    throw ValidationError(kModule, "distribution JSON must be an object with \"weights\"");
  }
  auto d = dist_from_array_json(j.at("weights"), "weights");
  auto space = labels_or_indexed(j, d.size());
  return {std::move(space), std::move(d)};
}

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string matrix_to_csv(const StochasticMatrix& matrix) {
  std::string out;
  for (State a = 0; a < matrix.size(); ++a) {
    auto r = matrix.row(a);
    for (std::size_t b = 0; b < r.size(); ++b) {
      if (b) out += ',';
      out += format_double(r[b]);
    }
    out += '\n';
  }
  return out;
}

nlohmann::json parse_json(std::string_view text, std::string_view what) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("io", std::string(what) + ": malformed JSON: " + e.what());
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("io", "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::string& path, std::string_view content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("io", "cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw ValidationError("io", "short write to '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw ValidationError("io", "cannot rename onto '" + path + "': " + ec.message());
}

}  // namespace emclab
