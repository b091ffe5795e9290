#pragma once

#include <string>
#include <vector>

#include "mmeval/gateway.hpp"
#include "mmeval/normalize.hpp"
#include "mmeval/prompts.hpp"

namespace mmeval {

struct AlignmentJudgment {
  double score = 1.0;          // Likert, clamped to [1,5]
  std::string rationale_text;  // full judge reply(ies), audit only
  bool degraded = false;       // true when the image set was chunked
};

struct AlignmentOptions {
  // Images per vision call; larger sets are split into deterministic
  // consecutive chunks and the chunk scores averaged.
  std::size_t max_images_per_request = 8;
};

// One vision-chat call carrying the summary and every selected image.
// Throws NoImages for an empty selection, MalformedResponse if no rating.
AlignmentJudgment judge_alignment(const std::string& summary_text, const std::vector<std::string>& images,
                                  const JudgeHandle& judge, const PromptTemplates& prompts = PromptTemplates::defaults(),
                                  OutOfRangeCounter* counter = nullptr, const AlignmentOptions& options = {});

}  // namespace mmeval
