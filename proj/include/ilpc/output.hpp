#pragma once

#include <string>

#include <json.hpp>

#include "ilpc/checks.hpp"

namespace ilpc {

// %.17g, so every double round-trips.
std::string fmt(double v);

nlohmann::json run_config_to_json(const RunConfig& cfg);
// Missing keys keep their defaults. Throws ConfigError on bad values.
RunConfig run_config_from_json(const nlohmann::json& j);

// {"version", "scenario", "run"}: everything needed to repeat the run.
nlohmann::json config_echo(const Scenario& sc, const RunConfig& cfg);

nlohmann::json audit_to_json(const RunAudit& a);

// Writes config_echo.json, trajectories.csv, tubes.csv, sets.csv,
// costs.csv, mpc_steps.csv and summary.json into `dir` (created if
// needed). Wall-clock timings go to timing.json so the rest stays
// byte-identical between repeated runs.
void write_run_bundle(const std::string& dir, const Scenario& sc, const RunResult& res,
                      const RunAudit& audit);

}  // namespace ilpc
