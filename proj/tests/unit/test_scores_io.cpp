#include <gtest/gtest.h>

#include <cmath>

#include <json.hpp>

#include "fixtures.hpp"
#include "mmeval/dataset.hpp"
#include "mmeval/error.hpp"
#include "mmeval/metadata.hpp"
#include "mmeval/scores_io.hpp"
#include "mmeval/scoring.hpp"
#include "mock_openai.hpp"

using namespace mmeval;

namespace {

UnitScoreRecord full_record(const std::string& article, const std::string& system, double base) {
  UnitScoreRecord r;
  r.scores.key = {article, system};
  r.scores.fact = Score{base, base};
  r.scores.rel = Score{base / 2, base / 2};
  r.scores.coh = Score{0.25, 0.25};
  r.scores.flu = Score{0.75, 0.75};
  r.scores.relevance = Score{4.0, 0.75};
  r.scores.diversity = Score{1.5, 0.1};
  r.facts = {{"claim one", true}, {"claim two", false}};
  r.rationales["alignment"] = "Rating: 4";
  return r;
}

HumanAnnotation annotation(const std::string& article, const std::string& system, double overall) {
  HumanAnnotation a;
  a.article_id = article;
  a.system_id = system;
  a.overall = overall;
  return a;
}

}  // namespace

TEST(Metadata, FormatDouble) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(2.0), "2");
  EXPECT_EQ(format_double(-0.4991), "-0.4991");
  EXPECT_EQ(format_double(NAN), "NA");
  EXPECT_EQ(std::stod(format_double(1.0 / 3.0)), 1.0 / 3.0);
  EXPECT_EQ(format_list({0.01, 0.1, 1, 10}), "0.01,0.1,1,10");
}

TEST(Metadata, ConfigHashTracksSettings) {
  OutputMetadata a;
  a.command = "calibrate";
  a.set("seed", "42");
  OutputMetadata b = a;
  EXPECT_EQ(a.config_hash(), b.config_hash());
  EXPECT_EQ(a.config_hash().size(), 64u);
  b.set("seed", "43");
  EXPECT_NE(a.config_hash(), b.config_hash());
  const auto header = a.csv_header();
  EXPECT_NE(header.find("# command: calibrate"), std::string::npos);
  EXPECT_NE(header.find("# config_hash: " + a.config_hash()), std::string::npos);
  const auto j = nlohmann::json::parse(a.jsonl_header());
  EXPECT_EQ(j["_meta"]["command"], "calibrate");
}

TEST(Metadata, InputHashIsContentHash) {
  fixture::TempDir dir("meta");
  fixture::write_text(dir / "x.txt", "abc");
  OutputMetadata m;
  m.add_input("x", dir / "x.txt");
  ASSERT_EQ(m.inputs.size(), 1u);
  EXPECT_EQ(m.inputs[0].second, "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(ScoresFile, RecordRoundTrip) {
  auto r = full_record("a1", "sysA", 0.5);
  r.warnings = {"something odd"};
  r.out_of_range = 2;
  const auto line = format_score_record(r);
  const auto back = parse_score_record(line);
  EXPECT_EQ(format_score_record(back), line);
  EXPECT_EQ(back.scores.relevance, r.scores.relevance);
  EXPECT_EQ(back.facts.size(), 2u);
  EXPECT_EQ(back.out_of_range, 2u);
  EXPECT_TRUE(back.ok());
}

TEST(ScoresFile, AbsentMarkersAreExplicit) {
  auto r = full_record("a1", "sysA", 0.5);
  r.scores.relevance.reset();
  r.scores.diversity.reset();
  const auto j = nlohmann::json::parse(format_score_record(r));
  EXPECT_TRUE(j["normalized"]["s_relevance"].is_null());
  EXPECT_EQ(j["absent"], (nlohmann::json{"s_relevance", "s_diversity"}));
  const auto back = parse_score_record(j.dump());
  EXPECT_FALSE(back.scores.relevance.has_value());
  EXPECT_EQ(back.absent(), (std::vector<std::string>{"s_relevance", "s_diversity"}));
}

TEST(ScoresFile, ErrorRecordRoundTrip) {
  UnitScoreRecord r;
  r.scores.key = {"a2", "sysB"};
  r.error_code = "MalformedResponse";
  r.error_message = "no score field";
  const auto back = parse_score_record(format_score_record(r));
  EXPECT_FALSE(back.ok());
  EXPECT_EQ(back.error_code, "MalformedResponse");
  EXPECT_EQ(back.error_message, "no score field");
}

TEST(ScoresFile, PercentScaledFactIsDivided) {
  const auto r = parse_score_record(
      R"({"article_id":"a","system_id":"s","normalized":{"s_fact_percent":62.5,"s_rel":0.5,"s_coh":0.5,"s_flu":0.5,"s_relevance":0.5,"s_diversity":0.5}})");
  ASSERT_TRUE(r.scores.fact.has_value());
  EXPECT_DOUBLE_EQ(r.scores.fact->normalized, 0.625);
  EXPECT_THROW(parse_score_record(R"({"article_id":"a","system_id":"s","normalized":{"s_fact":1.5}})"), Error);
}

TEST(ScoresFile, WriteLoadSortsAndRejectsDuplicates) {
  fixture::TempDir dir("scores");
  std::vector<UnitScoreRecord> records{full_record("a2", "sysA", 0.1), full_record("a1", "sysB", 0.2),
                                       full_record("a1", "sysA", 0.3)};
  OutputMetadata meta;
  meta.command = "score";
  write_scores(dir / "s.jsonl", records, meta);
  const auto text = fixture::read_text(dir / "s.jsonl");
  EXPECT_EQ(text.rfind("{\"_meta\"", 0), 0u);
  const auto loaded = load_scores(dir / "s.jsonl");
  ASSERT_EQ(loaded.size(), 3u);
  EXPECT_EQ(loaded[0].scores.key, (UnitKey{"a1", "sysA"}));
  EXPECT_EQ(loaded[2].scores.key, (UnitKey{"a2", "sysA"}));
  std::vector<UnitScoreRecord> shuffled{records[2], records[0], records[1]};
  EXPECT_EQ(format_scores(shuffled, meta), text);

  fixture::write_text(dir / "dup.jsonl", format_score_record(records[0]) + "\n" + format_score_record(records[0]) + "\n");
  try {
    load_scores(dir / "dup.jsonl");
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SchemaError);
  }
}

TEST(CalibrationRows, JoinAndExclusions) {
  auto absent = full_record("a3", "sysA", 0.4);
  absent.scores.diversity.reset();
  std::vector<UnitScoreRecord> records{full_record("a1", "sysA", 0.6), full_record("a2", "sysA", 0.2), absent};
  std::vector<HumanAnnotation> ann{annotation("a1", "sysA", 4.5), annotation("a3", "sysA", 2.0)};
  const auto rows = build_calibration_rows(records, ann);
  ASSERT_EQ(rows.rows.size(), 1u);
  EXPECT_EQ(rows.rows[0].overall, 4.5);
  EXPECT_EQ(rows.rows[0].s_fact, 0.6);
  EXPECT_EQ(rows.unannotated, (std::vector<UnitKey>{{"a2", "sysA"}}));
  EXPECT_EQ(rows.absent_pillars, (std::vector<UnitKey>{{"a3", "sysA"}}));
}

TEST(Pillars, Parse) {
  const auto all = parse_pillars("text,alignment,diversity");
  EXPECT_TRUE(all.text && all.alignment && all.diversity);
  const auto some = parse_pillars(" diversity ");
  EXPECT_FALSE(some.text);
  EXPECT_FALSE(some.alignment);
  EXPECT_TRUE(some.diversity);
  EXPECT_THROW(parse_pillars("text,colour"), Error);
}

TEST(Scoring, MockBackendScoresEveryPillar) {
  mock::OpenAiServer server;
  fixture::TempDir dir("scoring");
  fixture::DatasetOptions opts;
  opts.articles = 2;
  opts.systems = 2;
  opts.zero_image_unit = true;
  const auto files = fixture::write_dataset(dir.path(), opts);
  const auto ds = load_dataset(files.articles, files.candidates, files.annotations);

  GatewayConfig cfg;
  cfg.text_judge = cfg.vision_judge = cfg.embedder = {server.base_url(), ""};
  JudgeGateway gw(cfg);
  ScoringContext ctx;
  ctx.text_judge = {&gw, EndpointRole::TextJudge, "t", DecodingParams{}};
  ctx.vision_judge = {&gw, EndpointRole::VisionJudge, "v", DecodingParams{}};
  ctx.embedder = {&gw, EndpointRole::Embedder, "e", DecodingParams{}};

  const auto units = ds.units();
  const auto serial = score_units(units, ctx, 1);
  const auto parallel = score_units(units, ctx, 3);
  ASSERT_EQ(serial.size(), units.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    EXPECT_EQ(format_score_record(serial[i]), format_score_record(parallel[i]));
    EXPECT_TRUE(serial[i].ok()) << serial[i].error_message;
    EXPECT_TRUE(serial[i].scores.has_text_components());
  }
  // The first unit selects no images.
  EXPECT_FALSE(serial[0].scores.relevance.has_value());
  EXPECT_FALSE(serial[0].scores.diversity.has_value());
  EXPECT_FALSE(serial[0].warnings.empty());
  EXPECT_TRUE(serial[1].scores.complete());
  EXPECT_FALSE(serial[1].facts.empty());
}

TEST(Scoring, JudgeFailureIsCapturedPerUnit) {
  mock::OpenAiServer server;
  server.set_fixed_reply("I cannot answer that.");
  fixture::TempDir dir("scoring");
  fixture::DatasetOptions opts;
  opts.articles = 1;
  opts.systems = 1;
  const auto files = fixture::write_dataset(dir.path(), opts);
  const auto ds = load_dataset(files.articles, files.candidates, std::nullopt);
  GatewayConfig cfg;
  cfg.text_judge = cfg.vision_judge = cfg.embedder = {server.base_url(), ""};
  JudgeGateway gw(cfg);
  ScoringContext ctx;
  ctx.text_judge = {&gw, EndpointRole::TextJudge, "t", DecodingParams{}};
  ctx.vision_judge = {&gw, EndpointRole::VisionJudge, "v", DecodingParams{}};
  ctx.embedder = {&gw, EndpointRole::Embedder, "e", DecodingParams{}};
  const auto rec = score_unit(ds.units().at(0), ctx);
  EXPECT_FALSE(rec.ok());
  EXPECT_EQ(rec.error_code, "NoFactsExtracted");
}
