#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "dane/model.hpp"

namespace dane {

using KeyValues = std::map<std::string, std::string>;

// "key = value" lines; blank lines and lines starting with '#' are skipped.
KeyValues parse_key_values(const std::string& text, const std::string& source = "config");

// Defaults, then `file` values, then `flags`; later sources win. Keys are the
// TrainConfig field names; d, L, K and R are accepted as aliases of dim,
// layers, lookback and negatives. Unknown keys and malformed values raise
// ConfigError, as does a resolved config that fails validation.
TrainConfig resolve_config(const KeyValues& file, const KeyValues& flags);
TrainConfig resolve_config(const std::filesystem::path& file, const KeyValues& flags);

// Everything needed to repeat a run.
struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  nlohmann::json config = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::map<std::string, std::string> inputs;
  std::map<std::string, std::string> outputs;
  std::string tool_version;
  double wall_ms = 0.0;

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
};

void write_manifest(const RunManifest& manifest, const std::filesystem::path& file);
RunManifest read_manifest(const std::filesystem::path& file);

}  // namespace dane
