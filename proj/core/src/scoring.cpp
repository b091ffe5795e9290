#include "mmeval/scoring.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

#include "mmeval/error.hpp"
#include "mmeval/factuality.hpp"
#include "mmeval/normalize.hpp"
#include "mmeval/text_quality.hpp"
#include "text_util.hpp"

namespace mmeval {

PillarSelection parse_pillars(const std::string& list) {
  PillarSelection sel{false, false, false};
  std::size_t start = 0;
  bool any = false;
  while (start <= list.size()) {
    const auto comma = list.find(',', start);
    const std::string item(detail::trim(
        std::string_view(list).substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (item == "text") {
      sel.text = true;
    } else if (item == "alignment") {
      sel.alignment = true;
    } else if (item == "diversity") {
      sel.diversity = true;
    } else {
      throw Error(ErrorCode::InvalidArgument, "unknown pillar '" + item + "' (expected text, alignment, diversity)");
    }
    any = true;
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (!any) throw Error(ErrorCode::InvalidArgument, "no pillars selected");
  return sel;
}

namespace {

class UnitScorer {
 public:
  UnitScorer(const EvaluationUnit& unit, const ScoringContext& ctx) : unit_(unit), ctx_(ctx) {
    record_.scores.key = unit.key;
  }

  UnitScoreRecord run() {
    if (ctx_.pillars.text) guarded([&] { text(); });
    if (unit_.selected_images.empty()) {
      if (ctx_.pillars.alignment || ctx_.pillars.diversity) {
        record_.warnings.push_back("no selected images: relevance and diversity are absent");
      }
    } else {
      if (ctx_.pillars.alignment) guarded([&] { alignment(); });
      if (ctx_.pillars.diversity) guarded([&] { diversity(); });
    }
    record_.out_of_range = clamps_.count();
    return std::move(record_);
  }

 private:
  template <class Fn>
  void guarded(Fn&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      if (record_.ok()) {
        record_.error_code = std::string(to_string(e.code()));
        record_.error_message = e.what();
      }
    }
  }

  void text() {
    bool truncated = false;
    truncate_source(unit_.source_text, ctx_.source_budget, &truncated);
    if (truncated) record_.warnings.push_back("source text truncated to " + std::to_string(ctx_.source_budget) + " bytes");

    auto fact = score_factuality(unit_.summary_text, unit_.source_text, ctx_.text_judge, ctx_.prompts,
                                 ctx_.source_budget);
    for (const auto& f : fact.facts) record_.facts.push_back({f.text(), f.verdict().value_or(false)});
    record_.scores.fact = Score{fact.precision, normalize_score(fact.precision, bounds::kFact, &clamps_)};

    const std::pair<TextDimensionName, std::optional<Score> PillarScores::*> dims[] = {
        {TextDimensionName::Relevance, &PillarScores::rel},
        {TextDimensionName::Coherence, &PillarScores::coh},
        {TextDimensionName::Fluency, &PillarScores::flu},
    };
    for (const auto& [name, member] : dims) {
      const TextDimension dim{name};
      const double raw = judge_dimension(unit_.summary_text, unit_.source_text, dim, ctx_.text_judge, ctx_.prompts,
                                         &clamps_, ctx_.source_budget);
      record_.scores.*member = Score{raw, normalize_score(raw, dim.scale, &clamps_)};
    }
  }

  std::vector<std::string> locators() const {
    std::vector<std::string> out;
    for (const auto& img : unit_.selected_images) out.push_back(img.locator);
    return out;
  }

  void alignment() {
    auto j = judge_alignment(unit_.summary_text, locators(), ctx_.vision_judge, ctx_.prompts, &clamps_,
                             ctx_.alignment);
    if (j.degraded) record_.warnings.push_back("image set judged in chunks");
    record_.rationales["alignment"] = j.rationale_text;
    record_.scores.relevance = Score{j.score, normalize_score(j.score, bounds::kAlignment, &clamps_)};
  }

  void diversity() {
    DiversityResult d;
    if (ctx_.embeddings != nullptr) {
      std::vector<std::vector<double>> rows;
      for (const auto& img : unit_.selected_images) {
        auto v = ctx_.embeddings->find(unit_.key.article_id, img.image_id);
        if (!v) {
          throw Error(ErrorCode::MissingReference,
                      "no precomputed embedding for image " + img.image_id + " of article " + unit_.key.article_id,
                      img.image_id);
        }
        rows.push_back(std::move(*v));
      }
      d = diversity_from_embeddings(EmbeddingMatrix::from_rows(rows, "precomputed"), ctx_.max_eigen, &clamps_);
    } else {
      d = diversity_score(locators(), ctx_.embedder, ctx_.max_eigen, &clamps_);
    }
    record_.scores.diversity = Score{d.raw, d.normalized};
  }

  const EvaluationUnit& unit_;
  const ScoringContext& ctx_;
  UnitScoreRecord record_;
  OutOfRangeCounter clamps_;
};

}  // namespace

UnitScoreRecord score_unit(const EvaluationUnit& unit, const ScoringContext& ctx) {
  return UnitScorer(unit, ctx).run();
}

std::vector<UnitScoreRecord> score_units(const std::vector<EvaluationUnit>& units, const ScoringContext& ctx,
                                         std::size_t workers) {
  std::vector<UnitScoreRecord> out(units.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < units.size(); i = next++) out[i] = score_unit(units[i], ctx);
  };
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(units.size(), 1));
  std::vector<std::jthread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  return out;
}

}  // namespace mmeval
