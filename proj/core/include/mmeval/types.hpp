#pragma once

#include <compare>
#include <optional>
#include <string>
#include <vector>

namespace mmeval {

// Identifies one (article, system output) pair across every file the
// toolkit reads or writes.
struct UnitKey {
  std::string article_id;
  std::string system_id;

  friend auto operator<=>(const UnitKey&, const UnitKey&) = default;
  friend bool operator==(const UnitKey&, const UnitKey&) = default;

  std::string to_string() const { return article_id + "/" + system_id; }
};

struct ImageRef {
  std::string image_id;
  std::string locator;
  std::optional<std::string> caption;
};

struct Article {
  std::string article_id;
  std::string source_text;
  std::vector<ImageRef> images;

  const ImageRef* find_image(const std::string& image_id) const;
};

struct CandidateSummary {
  std::string article_id;
  std::string system_id;
  std::string summary_text;
  std::vector<std::string> selected_image_ids;

  UnitKey key() const { return {article_id, system_id}; }
};

// Seven human rating dimensions, each on a 1..5 scale. Values may be
// fractional once several annotators are averaged.
struct HumanAnnotation {
  std::string article_id;
  std::string system_id;
  std::optional<std::string> annotator_id;
  double coherence = 0.0;
  double consistency = 0.0;
  double fluency = 0.0;
  double relevance = 0.0;
  double image_set_quality = 0.0;
  double text_image_relevance = 0.0;
  double overall = 0.0;

  UnitKey key() const { return {article_id, system_id}; }
};

// A fully resolved unit: everything a scorer needs without further lookups.
struct EvaluationUnit {
  UnitKey key;
  std::string source_text;
  std::vector<ImageRef> source_images;
  std::string summary_text;
  std::vector<ImageRef> selected_images;
};

// Raw judge/metric output next to its [0,1]-normalized value.
struct Score {
  double raw = 0.0;
  double normalized = 0.0;

  friend bool operator==(const Score&, const Score&) = default;
};

// Per-unit pillar scores. An empty optional is an explicit "absent" marker
// (pillar not computed, or undefined such as alignment for zero images).
struct PillarScores {
  UnitKey key;
  std::optional<Score> fact;
  std::optional<Score> rel;
  std::optional<Score> coh;
  std::optional<Score> flu;
  std::optional<Score> relevance;
  std::optional<Score> diversity;
  std::optional<double> text;  // S_text, filled after stage-1 calibration

  bool has_text_components() const { return fact && rel && coh && flu; }
  bool complete() const { return has_text_components() && relevance && diversity; }
};

}  // namespace mmeval
