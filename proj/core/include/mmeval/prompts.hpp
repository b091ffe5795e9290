#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mmeval {

// Editable prompt templates. Placeholders are written {name}; only the names
// passed to render() are substituted, any other braces are left untouched.
struct PromptTemplates {
  std::string atomic_facts;     // {summary}
  std::string fact_validation;  // {fact} {source}
  std::string relevance;        // {summary} {source} {scale_min} {scale_max}
  std::string coherence;
  std::string fluency;
  std::string alignment;  // {summary} {image_count}

  // Templates compiled in from core/prompts/.
  static PromptTemplates defaults();

  // Defaults overridden by any of afg.txt, afv.txt, relevance.txt,
  // coherence.txt, fluency.txt, alignment.txt found in `dir`.
  static PromptTemplates load(const std::filesystem::path& dir);
};

std::string render(std::string_view tmpl, const std::vector<std::pair<std::string, std::string>>& values);

// Cuts `text` to at most `budget` bytes on a UTF-8 boundary. `truncated` is
// set when anything was removed.
std::string truncate_source(const std::string& text, std::size_t budget, bool* truncated = nullptr);

inline constexpr std::size_t kDefaultSourceBudget = 12000;

}  // namespace mmeval
