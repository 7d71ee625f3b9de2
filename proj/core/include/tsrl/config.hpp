#pragma once

#include <filesystem>
#include <string>

#include "tsrl/orchestrator.hpp"

namespace tsrl {

/// Parses a run configuration from JSON text. Every field defaults; present
/// keys override. Unknown keys are rejected (std::invalid_argument), as are
/// values that fail validation.
RunConfig parse_run_config(const std::string& json_text);

/// Reads and parses a config file; a missing or unreadable file throws
/// std::invalid_argument.
RunConfig load_run_config(const std::filesystem::path& path);

/// Fully resolved config as pretty-printed JSON (defaults filled in).
/// parse_run_config(run_config_to_json_string(c)) reproduces c exactly.
std::string run_config_to_json_string(const RunConfig& config);

}  // namespace tsrl
