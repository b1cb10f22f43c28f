#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "uavx/trainer.h"

namespace uavx::config {

// Plain-text experiment description, one `key = value` per line; `#` starts
// a comment. Repeatable keys (world.obstacle, world.waypoint) accumulate.
// Parsing starts from built-in defaults, so every key is optional. Errors are
// ConfigError with a "source:line:" prefix.
train::ExperimentConfig parse_config(std::istream& in, const std::string& source_name);
train::ExperimentConfig parse_config_text(std::string_view text, const std::string& source_name);
train::ExperimentConfig load_config_file(const std::filesystem::path& path);

// Round-trips through parse_config.
std::string to_config_text(const train::ExperimentConfig& config);

std::vector<std::string> preset_names();
std::optional<std::string_view> preset_text(std::string_view name);

// Loads `spec` as a file when it exists, else as a preset name (a trailing
// ".cfg" is ignored for presets).
train::ExperimentConfig resolve_config(const std::string& spec);

}  // namespace uavx::config
