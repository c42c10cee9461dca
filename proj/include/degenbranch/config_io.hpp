#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "degenbranch/harness.hpp"

namespace degenbranch {

using Json = nlohmann::ordered_json;

// Parses and validates a configuration document. Unknown keys, wrong types
// and out-of-range values raise ConfigError naming the offending "$.path".
ExperimentConfig parse_config(const Json& doc);
ExperimentConfig parse_config_text(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

Json config_to_json(const ExperimentConfig& config);

// Serializes with every floating-point number printed to 17 significant
// digits, so values re-parse to the same bits. Non-finite numbers become null.
std::string format_json(const Json& value, int indent = 2);

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace degenbranch
