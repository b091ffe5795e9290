#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace mmeval {

std::string tool_version();

// Provenance header written at the top of every output file. Contains no
// timestamps, so equal headers imply byte-identical bodies.
struct OutputMetadata {
  std::string command;
  // Settings echoed verbatim (seeds, grids, flags), in insertion order.
  std::vector<std::pair<std::string, std::string>> settings;
  // Input name -> SHA-256 of the file contents.
  std::vector<std::pair<std::string, std::string>> inputs;

  void set(const std::string& key, const std::string& value);
  void add_input(const std::string& name, const std::filesystem::path& path);

  // SHA-256 over the canonical settings listing.
  std::string config_hash() const;

  // "# key: value" lines, one per field.
  std::string csv_header() const;
  // Compact JSON object.
  std::string json() const;
  // {"_meta": {...}} as a single line, for line-delimited outputs.
  std::string jsonl_header() const;
};

// Joins values with commas using the shortest round-trip formatting.
std::string format_list(const std::vector<double>& values);
// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

}  // namespace mmeval
