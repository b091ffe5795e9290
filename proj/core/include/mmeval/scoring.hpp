#pragma once

#include <string>
#include <vector>

#include "mmeval/alignment.hpp"
#include "mmeval/diversity.hpp"
#include "mmeval/gateway.hpp"
#include "mmeval/prompts.hpp"
#include "mmeval/scores_io.hpp"
#include "mmeval/types.hpp"

namespace mmeval {

struct PillarSelection {
  bool text = true;
  bool alignment = true;
  bool diversity = true;
};

// Comma list drawn from {text, alignment, diversity}. Throws InvalidArgument.
PillarSelection parse_pillars(const std::string& list);

struct ScoringContext {
  JudgeHandle text_judge;
  JudgeHandle vision_judge;
  JudgeHandle embedder;
  PromptTemplates prompts = PromptTemplates::defaults();
  PillarSelection pillars;
  // When set, diversity reads vectors from here instead of the embedder.
  const EmbeddingStore* embeddings = nullptr;
  std::size_t source_budget = kDefaultSourceBudget;
  std::size_t max_eigen = kDefaultMaxEigen;
  AlignmentOptions alignment;
};

// Scores every selected pillar for one unit. Judge and data failures are
// captured in the record (first error wins; the failing pillar stays
// absent). A unit with no selected images gets absent relevance/diversity
// and a warning, which is not a failure.
UnitScoreRecord score_unit(const EvaluationUnit& unit, const ScoringContext& ctx);

// Bounded worker pool over units; output order follows `units`.
std::vector<UnitScoreRecord> score_units(const std::vector<EvaluationUnit>& units, const ScoringContext& ctx,
                                         std::size_t workers);

}  // namespace mmeval
