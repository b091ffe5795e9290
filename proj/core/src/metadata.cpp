#include "mmeval/metadata.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include <json.hpp>

#include "mmeval/hashing.hpp"

#ifndef MMEVAL_VERSION
#define MMEVAL_VERSION "0.0.0"
#endif

namespace mmeval {

std::string tool_version() { return MMEVAL_VERSION; }

void OutputMetadata::set(const std::string& key, const std::string& value) {
  auto it = std::find_if(settings.begin(), settings.end(), [&](const auto& kv) { return kv.first == key; });
  if (it != settings.end()) {
    it->second = value;
  } else {
    settings.emplace_back(key, value);
  }
}

void OutputMetadata::add_input(const std::string& name, const std::filesystem::path& path) {
  inputs.emplace_back(name, sha256_file_hex(path));
}

std::string OutputMetadata::config_hash() const {
  auto sorted = settings;
  std::sort(sorted.begin(), sorted.end());
  nlohmann::json j = nlohmann::json::object();
  j["command"] = command;
  for (const auto& [k, v] : sorted) j["settings"][k] = v;
  return sha256_hex(j.dump());
}

std::string OutputMetadata::csv_header() const {
  std::string out = "# tool: mmeval " + tool_version() + "\n";
  out += "# command: " + command + "\n";
  out += "# config_hash: " + config_hash() + "\n";
  for (const auto& [k, v] : inputs) out += "# input." + k + ": " + v + "\n";
  for (const auto& [k, v] : settings) out += "# " + k + ": " + v + "\n";
  return out;
}

std::string OutputMetadata::json() const {
  nlohmann::ordered_json j;
  j["tool"] = "mmeval " + tool_version();
  j["command"] = command;
  j["config_hash"] = config_hash();
  j["inputs"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : inputs) j["inputs"][k] = v;
  j["settings"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : settings) j["settings"][k] = v;
  return j.dump();
}

std::string OutputMetadata::jsonl_header() const { return "{\"_meta\":" + json() + "}"; }

std::string format_double(double v) {
  if (std::isnan(v)) return "NA";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string format_list(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ",";
    out += format_double(values[i]);
  }
  return out;
}

}  // namespace mmeval
