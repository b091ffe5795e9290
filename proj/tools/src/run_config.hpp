#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mmeval::cli {

// Every setting a command may need. Resolved from, in increasing priority:
// built-in defaults, the --config JSON file, environment variables, flags.
struct RunConfig {
  std::string command;

  std::optional<std::filesystem::path> articles;
  std::optional<std::filesystem::path> candidates;
  std::optional<std::filesystem::path> annotations;
  std::optional<std::filesystem::path> scores;
  std::optional<std::filesystem::path> model;
  std::optional<std::filesystem::path> out;
  std::optional<std::filesystem::path> embeddings_file;
  std::optional<std::filesystem::path> cache_dir;
  std::optional<std::filesystem::path> prompts_dir;

  std::string pillars = "text,alignment,diversity";
  std::uint64_t seed = 42;
  std::vector<double> alpha_grid_1{0.01, 0.1, 1.0, 10.0};
  std::vector<double> alpha_grid_2{0.01, 0.1, 1.0, 10.0};
  std::size_t folds = 5;
  double test_fraction = 0.2;
  std::size_t bootstrap = 1000;
  std::size_t stability = 50;
  std::size_t max_inflight = 4;

  std::string text_model = "text-judge";
  std::string vision_model = "vision-judge";
  std::string embed_model = "clip-vit-b-32";
  std::string judge_api_base;
  std::string judge_api_key;
  std::string embed_api_base;
  std::string embed_api_key;
  int max_tokens = 1024;
  std::size_t source_budget = 12000;

  // Applies one "name=value" setting (names as the flags, without dashes).
  // Throws InvalidArgument for unknown names or unparsable values.
  void apply(const std::string& name, const std::string& value);

  // Settings that influence results, echoed into output metadata.
  std::vector<std::pair<std::string, std::string>> echo() const;
};

// Setting names accepted by apply(), in flag order.
const std::vector<std::string>& setting_names();

// Environment variable -> setting name.
const std::vector<std::pair<std::string, std::string>>& environment_bindings();

// Builds the configuration: defaults < config file < environment < flags.
RunConfig resolve_config(const std::string& command, const std::optional<std::filesystem::path>& config_file,
                         const std::map<std::string, std::string>& flags,
                         const std::map<std::string, std::string>& environment);

// Reads the bound variables from the process environment.
std::map<std::string, std::string> process_environment();

std::vector<double> parse_grid(const std::string& text);

}  // namespace mmeval::cli
