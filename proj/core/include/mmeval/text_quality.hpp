#pragma once

#include <array>
#include <filesystem>
#include <string>

#include "mmeval/gateway.hpp"
#include "mmeval/normalize.hpp"
#include "mmeval/prompts.hpp"

namespace mmeval {

enum class TextDimensionName { Relevance, Coherence, Fluency };

std::string_view to_string(TextDimensionName name);

struct TextDimension {
  TextDimensionName name = TextDimensionName::Relevance;
  NormalizationSpec scale = bounds::kTextComponent;

  const std::string& prompt_template(const PromptTemplates& prompts) const;
};

// Weights of the four text sub-scores (fact, rel, coh, flu). Non-negative and
// summing to 1 within 1e-6; the constructor enforces both.
class TextWeights {
 public:
  TextWeights(double fact, double rel, double coh, double flu);

  // Renormalizes non-negative raw weights to sum exactly 1.
  static TextWeights normalized(double fact, double rel, double coh, double flu);

  // Shipped defaults: fact 0.5502, rel 0.0168, coh 0.2866, flu 0.1465,
  // renormalized (the raw values sum to 1.0001).
  static TextWeights shipped_defaults();

  double fact() const noexcept { return w_[0]; }
  double rel() const noexcept { return w_[1]; }
  double coh() const noexcept { return w_[2]; }
  double flu() const noexcept { return w_[3]; }
  const std::array<double, 4>& as_array() const noexcept { return w_; }

 private:
  std::array<double, 4> w_;
};

inline constexpr std::array<double, 4> kPublishedTextWeights{0.5502, 0.0168, 0.2866, 0.1465};

// Reads the numeric value of the last "Score:"/"Rating:" form field. A reply
// consisting of a bare number is accepted too. Throws MalformedResponse.
double parse_form_score(const std::string& response);

// Raw score clamped to dim.scale (clamps counted in `counter`).
double judge_dimension(const std::string& summary_text, const std::string& source_text, const TextDimension& dim,
                       const JudgeHandle& judge, const PromptTemplates& prompts = PromptTemplates::defaults(),
                       OutOfRangeCounter* counter = nullptr, std::size_t source_budget = kDefaultSourceBudget);

// Convex combination of the four normalized sub-scores.
double compose_text_score(double s_fact, double s_rel, double s_coh, double s_flu, const TextWeights& w);

// Weights file: {"fact":..,"rel":..,"coh":..,"flu":..}.
TextWeights load_text_weights(const std::filesystem::path& path);
void save_text_weights(const TextWeights& w, const std::filesystem::path& path);

}  // namespace mmeval
