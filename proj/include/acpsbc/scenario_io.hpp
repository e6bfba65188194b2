#pragma once

#include <string>

#include "acpsbc/sim.hpp"

namespace acpsbc {

inline constexpr const char* kVersion = "0.1.0";

/// Parse a scenario JSON document. Throws ConfigError naming the offending
/// field on schema violations. Does not run Scenario::validate().
Scenario scenario_from_json(const std::string& text);

/// Load and parse a scenario file.
Scenario load_scenario(const std::string& path);

/// Canonical JSON serialization (fixed key order); round-trips through
/// scenario_from_json and backs config hashing.
std::string scenario_to_json(const Scenario& scenario);

}  // namespace acpsbc
