#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mmeval/types.hpp"

namespace mmeval {

// Cross-referenced, validated dataset. All collections are sorted by key so
// the in-memory result does not depend on record order within input files.
struct Dataset {
  std::vector<Article> articles;
  std::vector<CandidateSummary> candidates;
  // One row per unit, averaged over annotators.
  std::vector<HumanAnnotation> annotations;
  // Per-annotator rows as read, kept for agreement statistics.
  std::vector<HumanAnnotation> annotator_rows;

  const Article* find_article(const std::string& article_id) const;
  const HumanAnnotation* find_annotation(const UnitKey& key) const;

  // One EvaluationUnit per candidate, in key order.
  std::vector<EvaluationUnit> units() const;
};

// Relative local image locators are resolved against the file's directory.
std::vector<Article> load_articles(const std::filesystem::path& path);
std::vector<CandidateSummary> load_candidates(const std::filesystem::path& path);

// Per-annotator rows exactly as stored (validated, unsorted).
std::vector<HumanAnnotation> load_annotation_rows(const std::filesystem::path& path);

// Averages rows sharing (article_id, system_id). Output sorted by key.
std::vector<HumanAnnotation> average_annotations(std::vector<HumanAnnotation> rows);

// Loads and cross-validates the three record files. `annotations_path` may
// be omitted when only scoring is needed.
// Throws SchemaError (malformed record, with path and line number) or
// MissingReference (unknown article / unit id).
Dataset load_dataset(const std::filesystem::path& articles_path,
                     const std::filesystem::path& candidates_path,
                     const std::optional<std::filesystem::path>& annotations_path);

}  // namespace mmeval
