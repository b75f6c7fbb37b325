#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

namespace scorespace {

/// Parses a TOML document (the flat subset the bench configs use: sections,
/// dotted section names, scalar values, scalar arrays, comments) into a JSON
/// object, so TOML and JSON configs land in the same representation.
nlohmann::json parse_toml(const std::string& text);

/// Loads a config file; .json parses as JSON, anything else as TOML.
nlohmann::json load_config(const std::filesystem::path& path);

}  // namespace scorespace
