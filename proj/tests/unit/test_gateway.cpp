#include <gtest/gtest.h>

#include <future>

#include <json.hpp>

#include "fixtures.hpp"
#include "mmeval/error.hpp"
#include "mmeval/gateway.hpp"
#include "mock_openai.hpp"

using namespace mmeval;
using nlohmann::json;

namespace {

GatewayConfig config_for(const mock::OpenAiServer& server, const std::optional<std::filesystem::path>& cache = {}) {
  GatewayConfig c;
  c.text_judge = {server.base_url(), "test-key"};
  c.vision_judge = c.text_judge;
  c.embedder = c.text_judge;
  c.cache_dir = cache;
  c.backoff_initial = std::chrono::milliseconds(1);
  c.backoff_cap = std::chrono::milliseconds(2);
  return c;
}

JudgeRequest text_request(const std::string& prompt, const std::string& model = "judge") {
  return {EndpointRole::TextJudge, model, {ChatMessage{"user", prompt, {}}}, DecodingParams{}};
}

ErrorCode code_of(const std::function<void()>& fn, std::string* detail = nullptr) {
  try {
    fn();
  } catch (const Error& e) {
    if (detail) *detail = e.detail();
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(Gateway, PassesReplyThrough) {
  mock::OpenAiServer server;
  server.set_fixed_reply("SCORE: 4");
  JudgeGateway gw(config_for(server));
  const auto r = gw.complete(text_request("rate this"));
  EXPECT_EQ(r.raw_text, "SCORE: 4");
  EXPECT_FALSE(r.cached);
}

TEST(Gateway, SecondIdenticalRequestIsCached) {
  mock::OpenAiServer server;
  fixture::TempDir cache("cache");
  JudgeGateway gw(config_for(server, cache.path()));
  const auto first = gw.complete(text_request("hello"));
  const auto second = gw.complete(text_request("hello"));
  EXPECT_FALSE(first.cached);
  EXPECT_TRUE(second.cached);
  EXPECT_EQ(first.raw_text, second.raw_text);
  EXPECT_EQ(server.chat_requests(), 1u);
  EXPECT_EQ(gw.stats().cache_hits, 1u);
}

TEST(Gateway, CacheSurvivesNewGatewayAndDownBackend) {
  mock::OpenAiServer server;
  fixture::TempDir cache("cache");
  std::string first;
  {
    JudgeGateway gw(config_for(server, cache.path()));
    first = gw.complete(text_request("persist me")).raw_text;
  }
  server.down = true;
  JudgeGateway gw(config_for(server, cache.path()));
  const auto r = gw.complete(text_request("persist me"));
  EXPECT_TRUE(r.cached);
  EXPECT_EQ(r.raw_text, first);
}

TEST(Gateway, UnreachableBaseIsEndpointUnavailable) {
  GatewayConfig c;
  c.text_judge = {"http://127.0.0.1:1/v1", ""};
  c.backoff_initial = std::chrono::milliseconds(1);
  c.backoff_cap = std::chrono::milliseconds(1);
  c.timeout = std::chrono::seconds(2);
  JudgeGateway gw(c);
  EXPECT_EQ(code_of([&] { gw.complete(text_request("x")); }), ErrorCode::EndpointUnavailable);
}

TEST(Gateway, MissingBaseIsEndpointUnavailable) {
  JudgeGateway gw(GatewayConfig{});
  EXPECT_EQ(code_of([&] { gw.complete(text_request("x")); }), ErrorCode::EndpointUnavailable);
}

TEST(Gateway, RetriesTransientFailures) {
  mock::OpenAiServer server;
  server.fail_next = 2;
  JudgeGateway gw(config_for(server));
  EXPECT_NO_THROW(gw.complete(text_request("retry")));
  EXPECT_EQ(gw.stats().retries, 2u);
  EXPECT_EQ(server.chat_requests(), 3u);
}

TEST(Gateway, GivesUpAfterThreeAttempts) {
  mock::OpenAiServer server;
  server.down = true;
  JudgeGateway gw(config_for(server));
  EXPECT_EQ(code_of([&] { gw.complete(text_request("down")); }), ErrorCode::EndpointUnavailable);
  EXPECT_EQ(server.chat_requests(), 3u);
}

TEST(Gateway, WireFormatIsDeterministicChat) {
  mock::OpenAiServer server;
  fixture::TempDir dir("wire");
  const auto img = dir / "pic.png";
  fixture::write_text(img, "abc");
  JudgeGateway gw(config_for(server));
  JudgeRequest req{EndpointRole::VisionJudge, "vlm", {ChatMessage{"user", "look", {img.string(), "https://x/y.jpg"}}},
                   DecodingParams{}};
  gw.complete(req);
  const auto body = json::parse(server.bodies().back());
  EXPECT_EQ(body["model"], "vlm");
  EXPECT_EQ(body["temperature"], 0.0);
  EXPECT_EQ(body["top_p"], 1.0);
  EXPECT_EQ(body["max_tokens"], 1024);
  EXPECT_EQ(body["stream"], false);
  const auto& parts = body["messages"][0]["content"];
  ASSERT_EQ(parts.size(), 3u);
  EXPECT_EQ(parts[0]["text"], "look");
  EXPECT_EQ(parts[1]["image_url"]["url"], "data:image/png;base64,YWJj");
  EXPECT_EQ(parts[2]["image_url"]["url"], "https://x/y.jpg");
}

TEST(Gateway, MalformedPayloadIsMalformedResponse) {
  struct BadTransport : Transport {
    HttpResult post_json(const std::string&, const std::string&, const std::string&, const std::string&) override {
      return {200, R"({"choices":[]})", {}};
    }
  };
  GatewayConfig c;
  c.text_judge = {"http://unused/v1", ""};
  JudgeGateway gw(c, std::make_shared<BadTransport>());
  EXPECT_EQ(code_of([&] { gw.complete(text_request("x")); }), ErrorCode::MalformedResponse);
}

TEST(CacheKey, SensitiveToEveryField) {
  const auto base = CacheKey::for_request(text_request("abc"));
  EXPECT_EQ(base, CacheKey::for_request(text_request("abc")));
  EXPECT_EQ(base.digest.size(), 64u);
  EXPECT_NE(base, CacheKey::for_request(text_request("abd")));
  EXPECT_NE(base, CacheKey::for_request(text_request("abc", "other-model")));
  auto vision = text_request("abc");
  vision.role = EndpointRole::VisionJudge;
  EXPECT_NE(base, CacheKey::for_request(vision));
  auto budget = text_request("abc");
  budget.decoding = DecodingParams(512);
  EXPECT_NE(base, CacheKey::for_request(budget));
}

TEST(CacheKey, ImagesContributeContentNotPath) {
  fixture::TempDir dir("key");
  fixture::write_text(dir / "a.png", "same");
  fixture::write_text(dir / "b.png", "same");
  fixture::write_text(dir / "c.png", "different");
  auto with = [](const std::filesystem::path& p) {
    return CacheKey::for_request(
        {EndpointRole::VisionJudge, "m", {ChatMessage{"user", "t", {p.string()}}}, DecodingParams{}});
  };
  EXPECT_EQ(with(dir / "a.png"), with(dir / "b.png"));
  EXPECT_NE(with(dir / "a.png"), with(dir / "c.png"));
}

TEST(ResponseCache, ConcurrentWritersLeaveReadableEntry) {
  fixture::TempDir dir("cache");
  ResponseCache cache(dir.path());
  const auto key = CacheKey::for_embedding("m", "h");
  std::vector<std::future<void>> jobs;
  for (int i = 0; i < 16; ++i) {
    jobs.push_back(std::async(std::launch::async, [&] { cache.put(key, R"({"raw_text":"same"})"); }));
  }
  for (auto& j : jobs) j.get();
  EXPECT_EQ(cache.get(key).value(), R"({"raw_text":"same"})");
  EXPECT_EQ(cache.path_for(key).parent_path().filename().string(), key.digest.substr(0, 2));
}

TEST(Gateway, ConcurrentCallersAreSafe) {
  mock::OpenAiServer server;
  auto c = config_for(server);
  c.max_inflight = 2;
  JudgeGateway gw(c);
  std::vector<std::future<std::string>> jobs;
  for (int i = 0; i < 12; ++i) {
    jobs.push_back(std::async(std::launch::async, [&gw, i] {
      return gw.complete(text_request("Evaluation Criteria:\n\nCoherence x\nSummary:\n\ns" + std::to_string(i) +
                                      "\n\nEvaluation Form: Score: <number>"))
          .raw_text;
    }));
  }
  for (auto& j : jobs) EXPECT_NE(j.get().find("Score:"), std::string::npos);
  EXPECT_EQ(server.chat_requests(), 12u);
}

namespace {

struct Images {
  fixture::TempDir dir{"emb"};
  std::vector<std::string> paths;
  explicit Images(int n) {
    for (int i = 0; i < n; ++i) {
      const auto p = dir / ("img" + std::to_string(i) + ".png");
      fixture::write_text(p, "image-" + std::to_string(i));
      paths.push_back(p.string());
    }
  }
};

}  // namespace

TEST(Embeddings, ShapeMatchesRequest) {
  mock::OpenAiServer server;
  server.embedding_dim = 512;
  Images imgs(3);
  JudgeGateway gw(config_for(server));
  const auto m = gw.embed_images(imgs.paths, "clip");
  ASSERT_EQ(m.size(), 3u);
  for (const auto& row : m) EXPECT_EQ(row.size(), 512u);
}

TEST(Embeddings, DuplicateLocatorGivesIdenticalRows) {
  mock::OpenAiServer server;
  Images imgs(2);
  JudgeGateway gw(config_for(server));
  std::vector<std::string> locs{imgs.paths[0], imgs.paths[1], imgs.paths[0]};
  const auto m = gw.embed_images(locs, "clip");
  EXPECT_EQ(m[0], m[2]);
  EXPECT_NE(m[0], m[1]);
}

TEST(Embeddings, RowsAreCachedPerImage) {
  mock::OpenAiServer server;
  fixture::TempDir cache("cache");
  Images imgs(3);
  JudgeGateway gw(config_for(server, cache.path()));
  const auto first = gw.embed_images(std::vector<std::string>{imgs.paths[0], imgs.paths[1]}, "clip");
  const auto before = server.embedding_requests();
  const auto second = gw.embed_images(std::vector<std::string>{imgs.paths[1], imgs.paths[0]}, "clip");
  EXPECT_EQ(server.embedding_requests(), before);
  EXPECT_EQ(first[0], second[1]);
  gw.embed_images(std::vector<std::string>{imgs.paths[0], imgs.paths[2]}, "clip");
  EXPECT_EQ(server.embedding_requests(), before + 1);
}

TEST(Embeddings, RejectedImageNamesLocator) {
  mock::OpenAiServer server;
  Images imgs(2);
  const auto bad = imgs.dir / "bad.png";
  fixture::write_text(bad, "CORRUPTED bytes");
  JudgeGateway gw(config_for(server));
  std::string detail;
  std::vector<std::string> locs{imgs.paths[0], bad.string(), imgs.paths[1]};
  EXPECT_EQ(code_of([&] { gw.embed_images(locs, "clip"); }, &detail), ErrorCode::EndpointUnavailable);
  EXPECT_EQ(detail, bad.string());
}

TEST(Embeddings, DimensionIsConstantPerModel) {
  mock::OpenAiServer server;
  Images imgs(2);
  JudgeGateway gw(config_for(server));
  gw.embed_images(std::vector<std::string>{imgs.paths[0]}, "clip");
  server.embedding_dim = 8;
  EXPECT_EQ(code_of([&] { gw.embed_images(std::vector<std::string>{imgs.paths[1]}, "clip"); }),
            ErrorCode::EmbeddingDimensionMismatch);
}

TEST(Embeddings, UnreadableImageIsIoError) {
  mock::OpenAiServer server;
  JudgeGateway gw(config_for(server));
  std::vector<std::string> locs{"/nonexistent/image.png"};
  EXPECT_EQ(code_of([&] { gw.embed_images(locs, "clip"); }), ErrorCode::IoError);
}
