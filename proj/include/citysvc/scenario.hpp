#pragma once

#include <string>

#include "citysvc/feed_simulator.hpp"
#include "citysvc/platform.hpp"
#include "json.hpp"

namespace citysvc {

struct PredictionEvaluation {
  std::int64_t samples = 0;
  double mae_model = 0.0;     // configured alpha
  double mae_current = 0.0;   // alpha = 1, live state only
  double mae_constant = 0.0;  // always 0.5
  std::int64_t replay_mismatches = 0;
  std::int64_t replay_checks = 0;
};

// Replays `simulation` through the platform's bus. At every `horizon` step
// inside [eval_start, eval_end) it predicts the free fraction `horizon`
// ahead for each simulated block and scores it against the ground truth.
PredictionEvaluation evaluate_parking(Platform& platform, const ParkingSimulation& simulation,
                                      TimestampMs eval_start, TimestampMs eval_end,
                                      TimestampMs horizon);

// Executes one scripted query ({"type": "routes" | "ranking" | "incidents" |
// "block" | "blocks", ...}) in process.
nlohmann::json execute_query(const Platform& platform, const nlohmann::json& query);
// The gateway path answering the same query.
std::string query_path(const nlohmann::json& query);

/// Drives a scenario: simulated parking history and evaluation day, a
/// classifier hold-out check, a simulated report stream, then scripted
/// queries. Sections absent from the scenario are skipped and absent from
/// the report. Throws Error naming the failing step.
nlohmann::json run_scenario(Platform& platform, const nlohmann::json& scenario);

}  // namespace citysvc
