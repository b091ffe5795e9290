#include "mmeval/alignment.hpp"

#include <algorithm>

#include "mmeval/error.hpp"
#include "mmeval/text_quality.hpp"

namespace mmeval {

AlignmentJudgment judge_alignment(const std::string& summary_text, const std::vector<std::string>& images,
                                  const JudgeHandle& judge, const PromptTemplates& prompts,
                                  OutOfRangeCounter* counter, const AlignmentOptions& options) {
  if (images.empty()) throw Error(ErrorCode::NoImages, "alignment is undefined for an empty image selection");
  const std::size_t chunk = std::max<std::size_t>(1, options.max_images_per_request);

  AlignmentJudgment out;
  out.degraded = images.size() > chunk;
  double total = 0.0;
  std::size_t calls = 0;
  for (std::size_t start = 0; start < images.size(); start += chunk) {
    std::vector<std::string> part(images.begin() + static_cast<std::ptrdiff_t>(start),
                                  images.begin() + static_cast<std::ptrdiff_t>(std::min(images.size(), start + chunk)));
    const auto prompt =
        render(prompts.alignment, {{"summary", summary_text}, {"image_count", std::to_string(part.size())}});
    const auto reply = judge.ask(prompt, part);
    total += clamp_to(parse_form_score(reply), bounds::kAlignment, counter);
    if (!out.rationale_text.empty()) out.rationale_text += "\n---\n";
    out.rationale_text += reply;
    ++calls;
  }
  out.score = total / static_cast<double>(calls);
  return out;
}

}  // namespace mmeval
