#pragma once

#include <filesystem>
#include <istream>
#include <string>
#include <vector>

#include "sflick/pipeline.hpp"

namespace sflick {

struct ConfigKey {
  std::string name;
  std::string range;
  std::string help;
};

/// Every `key = value` setting understood by PipelineConfig, in manifest order.
const std::vector<ConfigKey>& config_keys();

void set_config_value(PipelineConfig& cfg, const std::string& key, const std::string& value);
std::string get_config_value(const PipelineConfig& cfg, const std::string& key);

/// Applies `key = value` lines on top of base. '#' starts a comment; unknown
/// keys and malformed values throw ErrorCode::config. Validates the result.
PipelineConfig parse_config(std::istream& in, PipelineConfig base = {});
PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base = {});

/// Flat `key = value` dump of every setting; parse_config() reproduces cfg.
std::string format_config(const PipelineConfig& cfg);

/// One line per key: name, default, range, description.
std::string config_help();

}  // namespace sflick
