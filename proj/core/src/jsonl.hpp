#pragma once

// Line-delimited JSON helpers shared by the record readers.

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include <json.hpp>

#include "mmeval/error.hpp"

namespace mmeval::detail {

using json = nlohmann::json;

struct RecordContext {
  const std::filesystem::path* path;
  std::size_t line;

  std::string where() const { return path->string() + ":" + std::to_string(line); }

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::SchemaError, where() + ": " + what, path->string());
  }
};

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::SchemaError, "cannot open record file " + path.string(), path.string());
  }
  return in;
}

// Calls fn(record, ctx) for every non-blank line. Lines whose object carries
// a "_meta" key (output-file headers) are skipped.
template <class Fn>
void for_each_record(const std::filesystem::path& path, Fn&& fn) {
  auto in = open_input(path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    RecordContext ctx{&path, lineno};
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      ctx.fail(std::string("malformed JSON: ") + e.what());
    }
    if (!record.is_object()) ctx.fail("record is not an object");
    if (record.contains("_meta")) continue;
    fn(record, ctx);
  }
}

inline std::string require_string(const json& j, const char* field, const RecordContext& ctx) {
  auto it = j.find(field);
  if (it == j.end() || !it->is_string()) ctx.fail(std::string("missing or non-string field '") + field + "'");
  return it->get<std::string>();
}

inline std::optional<std::string> optional_string(const json& j, const char* field,
                                                  const RecordContext& ctx) {
  auto it = j.find(field);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) ctx.fail(std::string("field '") + field + "' must be a string");
  return it->get<std::string>();
}

inline double require_number(const json& j, const char* field, const RecordContext& ctx) {
  auto it = j.find(field);
  if (it == j.end() || !it->is_number()) ctx.fail(std::string("missing or non-numeric field '") + field + "'");
  return it->get<double>();
}

inline std::optional<double> optional_number(const json& j, const char* field,
                                             const RecordContext& ctx) {
  auto it = j.find(field);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) ctx.fail(std::string("field '") + field + "' must be numeric");
  return it->get<double>();
}

}  // namespace mmeval::detail
