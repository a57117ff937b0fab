#pragma once

#include <string>

#include "ilpc/model.hpp"

namespace ilpc {

// Parses a scenario document. Throws ConfigError with the offending key on
// malformed input or when a stated check value (closed-loop norm, reference
// table) disagrees with what the data implies.
Scenario parse_scenario(const std::string& text, const std::string& origin = "<string>");
Scenario load_scenario(const std::string& path);

// "batch_process" and "batch_process_affine" are compiled in; anything else
// is treated as a path.
Scenario resolve_scenario(const std::string& name_or_path);
Scenario builtin_scenario();
Scenario builtin_affine_scenario();

const char* builtin_scenario_json();
const char* builtin_affine_scenario_json();
const char* build_version();

}  // namespace ilpc
