#include "dane/run_config.hpp"

#include <functional>

#include "dane/error.hpp"
#include "dane/text_format.hpp"

namespace dane {

using nlohmann::json;

KeyValues parse_key_values(const std::string& text, const std::string& source) {
  KeyValues out;
  std::size_t line_no = 0;
  for (const std::string_view raw : text::split(text, '\n')) {
    ++line_no;
    const std::string_view line = text::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key(text::trim(line.substr(0, eq)));
    if (key.empty()) throw ConfigError(source + ":" + std::to_string(line_no) + ": empty key");
    out[key] = std::string(text::trim(line.substr(eq + 1)));
  }
  return out;
}

namespace {

std::size_t to_count(const std::string& key, const std::string& value) {
  const auto parsed = text::parse_index(value);
  if (!parsed) {
    throw ConfigError("config key " + key + ": expected a non-negative integer, got \"" + value +
                      "\"");
  }
  return *parsed;
}

double to_real(const std::string& key, const std::string& value) {
  const auto parsed = text::parse_double(value);
  if (!parsed) throw ConfigError("config key " + key + ": expected a number, got \"" + value + "\"");
  return *parsed;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("config key " + key + ": expected true or false, got \"" + value + "\"");
}

using Setter = std::function<void(TrainConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    t["dim"] = [](TrainConfig& c, auto& k, auto& v) { c.dim = to_count(k, v); };
    t["layers"] = [](TrainConfig& c, auto& k, auto& v) { c.layers = to_count(k, v); };
    t["lookback"] = [](TrainConfig& c, auto& k, auto& v) { c.lookback = to_count(k, v); };
    t["negatives"] = [](TrainConfig& c, auto& k, auto& v) { c.negatives = to_count(k, v); };
    t["batch"] = [](TrainConfig& c, auto& k, auto& v) { c.batch = to_count(k, v); };
    t["lr"] = [](TrainConfig& c, auto& k, auto& v) { c.lr = to_real(k, v); };
    t["epochs"] = [](TrainConfig& c, auto& k, auto& v) { c.epochs = to_count(k, v); };
    t["seed"] = [](TrainConfig& c, auto& k, auto& v) { c.seed = to_count(k, v); };
    t["no_activeness"] = [](TrainConfig& c, auto& k, auto& v) { c.no_activeness = to_bool(k, v); };
    t["no_temporal"] = [](TrainConfig& c, auto& k, auto& v) { c.no_temporal = to_bool(k, v); };
    t["edge_scope"] = [](TrainConfig& c, auto&, auto& v) { c.edge_scope = parse_edge_scope(v); };
    t["max_neighbors"] = [](TrainConfig& c, auto& k, auto& v) { c.max_neighbors = to_count(k, v); };
    t["fine_tune_steps"] = [](TrainConfig& c, auto& k, auto& v) {
      c.fine_tune_steps = to_count(k, v);
    };
    t["fine_tune_lr"] = [](TrainConfig& c, auto& k, auto& v) { c.fine_tune_lr = to_real(k, v); };
    t["d"] = t["dim"];
    t["L"] = t["layers"];
    t["K"] = t["lookback"];
    t["R"] = t["negatives"];
    return t;
  }();
  return table;
}

void apply(TrainConfig& config, const KeyValues& values) {
  for (const auto& [key, value] : values) {
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError("unknown config key \"" + key + "\"");
    it->second(config, key, value);
  }
}

}  // namespace

TrainConfig resolve_config(const KeyValues& file, const KeyValues& flags) {
  TrainConfig config;
  apply(config, file);
  apply(config, flags);
  config.validate();
  return config;
}

TrainConfig resolve_config(const std::filesystem::path& file, const KeyValues& flags) {
  std::string text;
  try {
    text = text::read_file(file);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return resolve_config(parse_key_values(text, file.string()), flags);
}

json RunManifest::to_json() const {
  return json{{"command", command}, {"argv", argv},       {"config", config},
              {"seed", seed},       {"inputs", inputs},   {"outputs", outputs},
              {"tool_version", tool_version}, {"wall_ms", wall_ms}};
}

RunManifest RunManifest::from_json(const json& j) {
  RunManifest m;
  try {
    m.command = j.at("command").get<std::string>();
    m.argv = j.at("argv").get<std::vector<std::string>>();
    m.config = j.at("config");
    m.seed = j.at("seed").get<std::uint64_t>();
    m.inputs = j.at("inputs").get<std::map<std::string, std::string>>();
    m.outputs = j.at("outputs").get<std::map<std::string, std::string>>();
    m.tool_version = j.at("tool_version").get<std::string>();
    m.wall_ms = j.at("wall_ms").get<double>();
  } catch (const json::exception& e) {
    throw LoadError(std::string("malformed run manifest: ") + e.what());
  }
  return m;
}

void write_manifest(const RunManifest& manifest, const std::filesystem::path& file) {
  text::write_file(file, manifest.to_json().dump(2) + "\n");
}

RunManifest read_manifest(const std::filesystem::path& file) {
  try {
    return RunManifest::from_json(json::parse(text::read_file(file)));
  } catch (const json::parse_error& e) {
    throw LoadError(file.string() + ": " + e.what());
  }
}

}  // namespace dane
