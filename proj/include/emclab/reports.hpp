#pragma once

// JSON forms of every analysis result. States are written by label.
// Outputs carry no timestamps, so equal inputs give byte-identical files.

#include <string>
#include <string_view>

#include "emclab/analysis.hpp"
#include "emclab/censoring.hpp"
#include "emclab/emc_chain.hpp"
#include "emclab/oracle.hpp"
#include "emclab/verify.hpp"
#include "json.hpp"

namespace emclab {

/// "emclab <version>"
std::string version_string();

nlohmann::json schedule_to_json(const MatrixSchedule& schedule, const StateSpace& space);
nlohmann::json lemma1_to_json(const Lemma1Report& rep, const StateSpace& space);
nlohmann::json hit_report_to_json(const HitReport& rep, const StateSpace& space);
nlohmann::json censored_matrix_to_json(const CensoredMatrix& c, const StateSpace& space);
nlohmann::json structure_to_json(const StructureReport& rep, const StateSpace& space);
nlohmann::json stationary_to_json(const StationaryResult& res, const StateSpace& space);
nlohmann::json profile_to_json(const ConvergenceProfile& prof, const StateSpace& space);
nlohmann::json theorem1_to_json(const Theorem1Check& chk, const StateSpace& space);
nlohmann::json estimated_matrix_to_json(const EstimatedMatrix& est, const StateSpace& space);
nlohmann::json estimated_schedule_to_json(const EstimatedSchedule& est, const StateSpace& space);
nlohmann::json history_gap_to_json(const HistoryGap& gap, const StateSpace& space);

/// Marginals, first-order matrices and history gaps for t < T.
nlohmann::json oracle_to_json(const JointTable& joint, const StateSpace& space);

nlohmann::json verify_to_json(const VerifyReport& rep);

/// {"tool", "command", "config", "result"}
nlohmann::json envelope(std::string_view command, const nlohmann::json& config,
                        const nlohmann::json& result);

/// dump(2) plus a trailing newline.
std::string render(const nlohmann::json& j);

}  // namespace emclab
