#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "mmeval/error.hpp"
#include "mmeval/text_quality.hpp"
#include "scripted_judge.hpp"

using namespace mmeval;

TEST(FormScore, ReadsLastField) {
  EXPECT_DOUBLE_EQ(parse_form_score("Reasoning...\nScore: 4"), 4.0);
  EXPECT_DOUBLE_EQ(parse_form_score("score = 0.85"), 0.85);
  EXPECT_DOUBLE_EQ(parse_form_score("Score: 2\nOn reflection, Score: 3"), 3.0);
  EXPECT_DOUBLE_EQ(parse_form_score("**Rating:** 5"), 5.0);
  EXPECT_DOUBLE_EQ(parse_form_score(" 0.4 \n"), 0.4);
  EXPECT_THROW(parse_form_score("The summary is quite good overall."), Error);
}

TEST(JudgeDimension, LikertExamples) {
  const TextDimension likert{TextDimensionName::Coherence, {1.0, 5.0}};
  auto four = scripted::Judge::constant("Well organised.\nScore: 4");
  auto nine = scripted::Judge::constant("Score: 9");
  auto prose = scripted::Judge::constant("A fine summary with no number.");
  OutOfRangeCounter counter;
  EXPECT_DOUBLE_EQ(judge_dimension("s", "src", likert, four.handle, PromptTemplates::defaults(), &counter), 4.0);
  EXPECT_EQ(counter.count(), 0u);
  EXPECT_DOUBLE_EQ(judge_dimension("s", "src", likert, nine.handle, PromptTemplates::defaults(), &counter), 5.0);
  EXPECT_EQ(counter.count(), 1u);
  try {
    judge_dimension("s", "src", likert, prose.handle);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MalformedResponse);
  }
}

TEST(JudgeDimension, DefaultScaleIsUnitInterval) {
  const TextDimension dim{TextDimensionName::Fluency};
  EXPECT_DOUBLE_EQ(dim.scale.lower, 0.0);
  EXPECT_DOUBLE_EQ(dim.scale.upper, 1.0);
  auto judge = scripted::Judge::constant("Score: 0.7");
  EXPECT_DOUBLE_EQ(judge_dimension("summary", "source", dim, judge.handle), 0.7);
  const auto prompt = judge.transport->prompts().at(0);
  EXPECT_NE(prompt.find("summary"), std::string::npos);
  EXPECT_NE(prompt.find("source"), std::string::npos);
}

TEST(JudgeDimension, EachDimensionUsesItsOwnTemplate) {
  PromptTemplates p;
  p.relevance = "REL {summary}";
  p.coherence = "COH {summary}";
  p.fluency = "FLU {summary}";
  auto judge = scripted::Judge::constant("Score: 0.5");
  for (auto name : {TextDimensionName::Relevance, TextDimensionName::Coherence, TextDimensionName::Fluency}) {
    judge_dimension("x", "y", TextDimension{name}, judge.handle, p);
  }
  EXPECT_EQ(judge.transport->prompts(), (std::vector<std::string>{"REL x", "COH x", "FLU x"}));
}

TEST(ComposeText, Examples) {
  const auto published = TextWeights::normalized(0.5502, 0.0168, 0.2866, 0.1465);
  EXPECT_NEAR(compose_text_score(1, 1, 1, 1, published), 1.0, 1e-12);
  EXPECT_NEAR(0.5502 + 0.0168 + 0.2866 + 0.1465, 1.0001, 1e-12);
  EXPECT_DOUBLE_EQ(compose_text_score(0.3, 0.9, 0.9, 0.9, TextWeights(1, 0, 0, 0)), 0.3);
  EXPECT_DOUBLE_EQ(compose_text_score(0, 1, 1, 0, TextWeights(0.25, 0.25, 0.25, 0.25)), 0.5);
  EXPECT_THROW(compose_text_score(1.2, 0, 0, 0, published), Error);
}

TEST(TextWeights, ShippedDefaultsSumToOneAndKeepOrdering) {
  const auto w = TextWeights::shipped_defaults();
  EXPECT_NEAR(w.fact() + w.rel() + w.coh() + w.flu(), 1.0, 1e-12);
  EXPECT_GT(w.fact(), w.coh());
  EXPECT_GT(w.coh(), w.flu());
  EXPECT_GT(w.flu(), w.rel());
  EXPECT_NEAR(w.fact(), 0.5502, 2e-4);
}

TEST(TextWeights, ConstructorEnforcesSimplex) {
  EXPECT_THROW(TextWeights(0.5, 0.5, 0.5, 0.5), Error);
  EXPECT_THROW(TextWeights(1.5, -0.5, 0, 0), Error);
  EXPECT_THROW(TextWeights::normalized(0, 0, 0, 0), Error);
  EXPECT_NO_THROW(TextWeights(0.4, 0.3, 0.2, 0.1));
}

TEST(TextWeights, FileRoundTrip) {
  fixture::TempDir dir("weights");
  const TextWeights w(0.4, 0.1, 0.3, 0.2);
  save_text_weights(w, dir / "w.json");
  const auto back = load_text_weights(dir / "w.json");
  EXPECT_EQ(back.as_array(), w.as_array());
  fixture::write_text(dir / "bad.json", R"({"fact": 0.5})");
  EXPECT_THROW(load_text_weights(dir / "bad.json"), Error);
}
