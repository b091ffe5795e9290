#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mmeval/calibration.hpp"
#include "mmeval/metadata.hpp"
#include "mmeval/types.hpp"

namespace mmeval {

struct FactAudit {
  std::string text;
  bool supported = false;
};

// One line of the scores file.
struct UnitScoreRecord {
  PillarScores scores;
  std::string error_code;  // empty when the unit scored cleanly
  std::string error_message;
  std::vector<std::string> warnings;
  std::size_t out_of_range = 0;
  std::vector<FactAudit> facts;
  std::map<std::string, std::string> rationales;

  bool ok() const { return error_code.empty(); }
  // Names of the normalized fields that carry no value.
  std::vector<std::string> absent() const;
};

std::string format_score_record(const UnitScoreRecord& record);
UnitScoreRecord parse_score_record(const std::string& line, const std::string& where = "scores");

// Metadata line first, then records in key order.
void write_scores(const std::filesystem::path& path, std::span<const UnitScoreRecord> records,
                  const OutputMetadata& meta);
std::string format_scores(std::span<const UnitScoreRecord> records, const OutputMetadata& meta);

// Sorted by key. Throws SchemaError (with line) on malformed lines or
// duplicate keys. A "s_fact_percent" field is accepted in place of s_fact.
std::vector<UnitScoreRecord> load_scores(const std::filesystem::path& path);

struct CalibrationRows {
  std::vector<CalibrationRow> rows;
  std::vector<UnitKey> absent_pillars;  // excluded: a required feature is absent
  std::vector<UnitKey> unannotated;     // excluded: no human annotation
};

// Joins scores with averaged annotations on the unit key.
CalibrationRows build_calibration_rows(std::span<const UnitScoreRecord> records,
                                       std::span<const HumanAnnotation> annotations);

}  // namespace mmeval
