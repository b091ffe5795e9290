#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mmeval/gateway.hpp"
#include "mmeval/prompts.hpp"

namespace mmeval {

class AtomicFact {
 public:
  AtomicFact(std::size_t index, std::string text);

  std::size_t index() const noexcept { return index_; }
  const std::string& text() const noexcept { return text_; }
  const std::optional<bool>& verdict() const noexcept { return verdict_; }

  // Throws InvalidArgument if a verdict was already recorded.
  void set_verdict(bool supported);

 private:
  std::size_t index_;
  std::string text_;
  std::optional<bool> verdict_;
};

// Parses an enumerated list ("- x", "* x", "1. x", "2) x") into claims, in
// order. Lines without a list marker are ignored.
std::vector<std::string> parse_fact_list(const std::string& response);

// Throws NoFactsExtracted when the response holds no list items.
std::vector<AtomicFact> decompose_atomic_facts(const std::string& summary_text, const JudgeHandle& judge,
                                               const PromptTemplates& prompts = PromptTemplates::defaults());

// Closed token set, case-insensitive: true/supported -> true,
// false/unsupported/not supported -> false. The verdict is read from the last
// line that begins with a token (after an optional "Answer:"-style label), so
// reasoning may precede it. Throws MalformedResponse if no line qualifies.
bool parse_verdict(const std::string& response);

bool validate_fact(const AtomicFact& fact, const std::string& source_text, const JudgeHandle& judge,
                   const PromptTemplates& prompts = PromptTemplates::defaults(),
                   std::size_t source_budget = kDefaultSourceBudget);

// Mean of verdicts as 0/1. Throws NoFacts for an empty list.
double factual_precision(std::span<const bool> verdicts);
double factual_precision(const std::vector<bool>& verdicts);

struct FactualityResult {
  std::vector<AtomicFact> facts;
  double precision = 0.0;
};

// Decompose, validate each fact (concurrently when workers > 1), score.
FactualityResult score_factuality(const std::string& summary_text, const std::string& source_text,
                                  const JudgeHandle& judge, const PromptTemplates& prompts,
                                  std::size_t source_budget = kDefaultSourceBudget, std::size_t workers = 1);

}  // namespace mmeval
