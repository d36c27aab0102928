#pragma once

// JSON scenario files. Bus, line, event and controller references use the
// file's bus ids; everything in memory uses declaration-order indices.
// Named communication topologies expand to explicit matrices on load, so a
// serialized scenario is self-contained and parses back to an equal value.

#include <filesystem>
#include <string>

#include <json.hpp>

#include "dapigrid/scenario.hpp"

namespace dapigrid {

/// Throws ParseError (with line and column) for malformed JSON and
/// ValidationError (with a field path) for schema or range violations,
/// including unknown keys.
Scenario parse_scenario_text(const std::string& text, const std::string& source = "<input>");
Scenario parse_scenario(const std::filesystem::path& path);

nlohmann::ordered_json to_json(const Scenario& scenario);
std::string serialize_scenario(const Scenario& scenario);

}  // namespace dapigrid
