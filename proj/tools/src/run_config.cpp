#include "run_config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mmeval/error.hpp"
#include "mmeval/metadata.hpp"

namespace mmeval::cli {

namespace {

[[noreturn]] void bad_value(const std::string& name, const std::string& value) {
  throw Error(ErrorCode::InvalidArgument, "invalid value for --" + name + ": '" + value + "'");
}

template <class T>
T parse_number(const std::string& name, const std::string& value) {
  T out{};
  const auto* end = value.data() + value.size();
  auto res = std::from_chars(value.data(), end, out);
  if (res.ec != std::errc{} || res.ptr != end) bad_value(name, value);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

}  // namespace

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto v = parse_number<double>("alpha-grid", trim(item));
    if (!(v >= 0.0)) bad_value("alpha-grid", text);
    out.push_back(v);
  }
  if (out.empty()) bad_value("alpha-grid", text);
  return out;
}

const std::vector<std::string>& setting_names() {
  static const std::vector<std::string> names = {
      "articles",       "candidates",    "annotations",    "scores",        "model",        "out",
      "pillars",        "seed",          "alpha-grid-1",   "alpha-grid-2",  "folds",        "test-fraction",
      "bootstrap",      "stability",     "embeddings-file", "cache-dir",    "max-inflight", "prompts-dir",
      "text-model",     "vision-model",  "embed-model",    "judge-api-base", "judge-api-key", "embed-api-base",
      "embed-api-key",  "max-tokens",    "source-budget"};
  return names;
}

const std::vector<std::pair<std::string, std::string>>& environment_bindings() {
  static const std::vector<std::pair<std::string, std::string>> env = {
      {"JUDGE_API_BASE", "judge-api-base"}, {"JUDGE_API_KEY", "judge-api-key"},
      {"EMBED_API_BASE", "embed-api-base"}, {"EMBED_API_KEY", "embed-api-key"},
      {"MMEVAL_CACHE_DIR", "cache-dir"},    {"MMEVAL_MAX_INFLIGHT", "max-inflight"}};
  return env;
}

void RunConfig::apply(const std::string& name, const std::string& value) {
  if (name == "articles") articles = value;
  else if (name == "candidates") candidates = value;
  else if (name == "annotations") annotations = value;
  else if (name == "scores") scores = value;
  else if (name == "model") model = value;
  else if (name == "out") out = value;
  else if (name == "embeddings-file") embeddings_file = value;
  else if (name == "cache-dir") cache_dir = value;
  else if (name == "prompts-dir") prompts_dir = value;
  else if (name == "pillars") pillars = value;
  else if (name == "seed") seed = parse_number<std::uint64_t>(name, value);
  else if (name == "alpha-grid-1") alpha_grid_1 = parse_grid(value);
  else if (name == "alpha-grid-2") alpha_grid_2 = parse_grid(value);
  else if (name == "folds") folds = parse_number<std::size_t>(name, value);
  else if (name == "test-fraction") test_fraction = parse_number<double>(name, value);
  else if (name == "bootstrap") bootstrap = parse_number<std::size_t>(name, value);
  else if (name == "stability") stability = parse_number<std::size_t>(name, value);
  else if (name == "max-inflight") max_inflight = parse_number<std::size_t>(name, value);
  else if (name == "text-model") text_model = value;
  else if (name == "vision-model") vision_model = value;
  else if (name == "embed-model") embed_model = value;
  else if (name == "judge-api-base") judge_api_base = value;
  else if (name == "judge-api-key") judge_api_key = value;
  else if (name == "embed-api-base") embed_api_base = value;
  else if (name == "embed-api-key") embed_api_key = value;
  else if (name == "max-tokens") max_tokens = parse_number<int>(name, value);
  else if (name == "source-budget") source_budget = parse_number<std::size_t>(name, value);
  else throw Error(ErrorCode::InvalidArgument, "unknown setting '" + name + "'");

  if (name == "max-inflight" && max_inflight == 0) bad_value(name, value);
  if (name == "max-tokens" && max_tokens <= 0) bad_value(name, value);
  if (name == "folds" && folds < 2) bad_value(name, value);
  if (name == "test-fraction" && !(test_fraction > 0.0 && test_fraction < 1.0)) bad_value(name, value);
}

std::vector<std::pair<std::string, std::string>> RunConfig::echo() const {
  return {{"seed", std::to_string(seed)},
          {"alpha-grid-1", format_list(alpha_grid_1)},
          {"alpha-grid-2", format_list(alpha_grid_2)},
          {"folds", std::to_string(folds)},
          {"test-fraction", format_double(test_fraction)},
          {"bootstrap", std::to_string(bootstrap)},
          {"stability", std::to_string(stability)},
          {"pillars", pillars},
          {"text-model", text_model},
          {"vision-model", vision_model},
          {"embed-model", embed_model},
          {"max-tokens", std::to_string(max_tokens)},
          {"source-budget", std::to_string(source_budget)}};
}

namespace {

std::string json_to_setting(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array()) {
    std::string out;
    for (const auto& e : v) {
      if (!out.empty()) out += ",";
      out += json_to_setting(e);
    }
    return out;
  }
  if (v.is_number_float()) return format_double(v.get<double>());
  return v.dump();
}

}  // namespace

RunConfig resolve_config(const std::string& command, const std::optional<std::filesystem::path>& config_file,
                         const std::map<std::string, std::string>& flags,
                         const std::map<std::string, std::string>& environment) {
  RunConfig cfg;
  cfg.command = command;
  if (config_file) {
    std::ifstream in(*config_file);
    if (!in) {
      throw Error(ErrorCode::SchemaError, "cannot open config file " + config_file->string(), config_file->string());
    }
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::SchemaError, config_file->string() + ": " + e.what(), config_file->string());
    }
    if (!doc.is_object()) throw Error(ErrorCode::SchemaError, config_file->string() + ": expected an object");
    for (const auto& [key, value] : doc.items()) cfg.apply(key, json_to_setting(value));
  }
  for (const auto& [var, name] : environment_bindings()) {
    auto it = environment.find(var);
    if (it != environment.end() && !it->second.empty()) cfg.apply(name, it->second);
  }
  for (const auto& [name, value] : flags) cfg.apply(name, value);
  return cfg;
}

std::map<std::string, std::string> process_environment() {
  std::map<std::string, std::string> env;
  for (const auto& [var, name] : environment_bindings()) {
    if (const char* v = std::getenv(var.c_str())) env[var] = v;
  }
  return env;
}

}  // namespace mmeval::cli
