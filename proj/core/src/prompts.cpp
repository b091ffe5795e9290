#include "mmeval/prompts.hpp"

#include "mmeval/error.hpp"
#include "mmeval/hashing.hpp"
#include "prompt_defaults.inc"

namespace mmeval {

PromptTemplates PromptTemplates::defaults() {
  return {std::string(prompt_defaults::kAfg),       std::string(prompt_defaults::kAfv),
          std::string(prompt_defaults::kRelevance), std::string(prompt_defaults::kCoherence),
          std::string(prompt_defaults::kFluency),   std::string(prompt_defaults::kAlignment)};
}

PromptTemplates PromptTemplates::load(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorCode::IoError, "prompt directory not found: " + dir.string(), dir.string());
  }
  auto t = defaults();
  const std::pair<const char*, std::string*> files[] = {
      {"afg.txt", &t.atomic_facts}, {"afv.txt", &t.fact_validation}, {"relevance.txt", &t.relevance},
      {"coherence.txt", &t.coherence}, {"fluency.txt", &t.fluency},   {"alignment.txt", &t.alignment},
  };
  for (const auto& [name, slot] : files) {
    const auto p = dir / name;
    if (std::filesystem::exists(p)) *slot = read_file_bytes(p);
  }
  return t;
}

std::string render(std::string_view tmpl, const std::vector<std::pair<std::string, std::string>>& values) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      const auto close = tmpl.find('}', i + 1);
      if (close != std::string_view::npos) {
        const auto name = tmpl.substr(i + 1, close - i - 1);
        bool replaced = false;
        for (const auto& [key, value] : values) {
          if (name == key) {
            out += value;
            replaced = true;
            break;
          }
        }
        if (replaced) {
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(tmpl[i++]);
  }
  return out;
}

std::string truncate_source(const std::string& text, std::size_t budget, bool* truncated) {
  if (truncated != nullptr) *truncated = text.size() > budget;
  if (text.size() <= budget) return text;
  std::size_t cut = budget;
  // Step back over UTF-8 continuation bytes.
  while (cut > 0 && (static_cast<unsigned char>(text[cut]) & 0xC0) == 0x80) --cut;
  return text.substr(0, cut);
}

}  // namespace mmeval
