#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

namespace trimer {

/// Parses a TOML subset into JSON: comments, [table] and [a.b] headers,
/// bare or quoted keys, and values that are basic strings, integers, floats,
/// booleans or single-line arrays of those. Anything else raises InvalidArgument
/// naming the offending line.
nlohmann::json parse_toml(const std::string& text);

/// Reads a .json or .toml file (by extension) into a JSON object.
nlohmann::json load_config(const std::filesystem::path& path);

/// Looks up a dotted key ("tomography.nbins"); nullptr when absent.
const nlohmann::json* config_lookup(const nlohmann::json& config, const std::string& dotted);

}  // namespace trimer
