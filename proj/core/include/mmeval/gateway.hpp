#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <span>
#include <string>
#include <vector>

namespace mmeval {

enum class EndpointRole { TextJudge, VisionJudge, Embedder };

std::string_view to_string(EndpointRole role);

// Decoding is fixed to greedy: temperature 0 and sampling disabled. Only the
// token budget is adjustable.
class DecodingParams {
 public:
  explicit DecodingParams(int max_tokens = 1024);

  double temperature() const noexcept { return 0.0; }
  bool sampling() const noexcept { return false; }
  int max_tokens() const noexcept { return max_tokens_; }

 private:
  int max_tokens_;
};

struct ChatMessage {
  std::string role;  // "system" | "user" | "assistant"
  std::string text;
  std::vector<std::string> image_locators;
};

struct JudgeRequest {
  EndpointRole role = EndpointRole::TextJudge;
  std::string model_name;
  std::vector<ChatMessage> messages;
  DecodingParams decoding;
};

struct JudgeResponse {
  std::string raw_text;
  bool cached = false;
  std::uint64_t latency_ms = 0;
};

// True when the locator is fetched by the backend (http(s) or data URI)
// rather than read from the local filesystem.
bool is_remote_locator(const std::string& locator);

// Stable hash of an image's content: file bytes for local locators, the URL
// string for remote ones. Throws IoError (detail = locator) if unreadable.
std::string image_content_hash(const std::string& locator);

// Content-addressed key over role, model, canonicalized messages (images
// contribute content hashes, not locators) and decoding parameters.
struct CacheKey {
  std::string digest;  // 64 hex chars

  static CacheKey for_request(const JudgeRequest& request);
  static CacheKey for_embedding(const std::string& model_name, const std::string& image_hash);

  friend bool operator==(const CacheKey&, const CacheKey&) = default;
};

// On-disk cache: one file per key under <dir>/<digest[0:2]>/<digest>.json.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  std::optional<std::string> get(const CacheKey& key) const;
  void put(const CacheKey& key, const std::string& payload) const;
  std::filesystem::path path_for(const CacheKey& key) const;
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
};

struct EndpointConfig {
  std::string base_url;  // e.g. http://localhost:8000/v1
  std::string api_key;
};

struct GatewayConfig {
  EndpointConfig text_judge;
  EndpointConfig vision_judge;
  EndpointConfig embedder;
  std::optional<std::filesystem::path> cache_dir;
  std::size_t max_inflight = 4;
  int max_attempts = 3;
  std::chrono::milliseconds backoff_initial{250};
  std::chrono::milliseconds backoff_cap{4000};
  std::chrono::seconds timeout{300};

  // JUDGE_API_BASE/KEY (text and vision), EMBED_API_BASE/KEY,
  // MMEVAL_CACHE_DIR, MMEVAL_MAX_INFLIGHT.
  static GatewayConfig from_environment();
};

struct HttpResult {
  int status = 0;  // 0 = no HTTP response (connection failure, timeout)
  std::string body;
  std::string transport_error;
};

// POSTs a JSON body to base_url + path. Implementations must be callable
// concurrently.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpResult post_json(const std::string& base_url, const std::string& path, const std::string& api_key,
                               const std::string& body) = 0;
};

std::shared_ptr<Transport> make_http_transport(std::chrono::seconds timeout);

// Client for OpenAI-compatible chat-completions and embeddings routes with
// retry, bounded concurrency and a persistent response cache.
class JudgeGateway {
 public:
  explicit JudgeGateway(GatewayConfig config, std::shared_ptr<Transport> transport = nullptr);

  // Throws EndpointUnavailable after exhausting retries, MalformedResponse
  // for a non-conforming payload.
  JudgeResponse complete(const JudgeRequest& request);

  // One row per locator, in order. Rows are cached per image content hash.
  // Throws EmbeddingDimensionMismatch, EndpointUnavailable (detail = locator
  // when the backend rejects a specific image).
  std::vector<std::vector<double>> embed_images(std::span<const std::string> locators,
                                                const std::string& model_name);

  struct Stats {
    std::uint64_t network_requests = 0;
    std::uint64_t cache_hits = 0;
    std::uint64_t retries = 0;
  };
  Stats stats() const;

  const GatewayConfig& config() const { return config_; }

 private:
  const EndpointConfig& endpoint_for(EndpointRole role) const;
  std::string post_with_retry(const EndpointConfig& endpoint, const std::string& path, const std::string& body,
                              EndpointRole role);

  GatewayConfig config_;
  std::shared_ptr<Transport> transport_;
  std::optional<ResponseCache> cache_;
  std::counting_semaphore<1024> inflight_;
  mutable std::mutex mutex_;
  Stats stats_;
  std::map<std::string, std::size_t> embedding_dims_;
};

// A model bound to a gateway role; the value passed to scorers.
struct JudgeHandle {
  JudgeGateway* gateway = nullptr;
  EndpointRole role = EndpointRole::TextJudge;
  std::string model;
  DecodingParams decoding;

  // Single user turn carrying `prompt` and optional images.
  std::string ask(const std::string& prompt, const std::vector<std::string>& images = {}) const;
};

}  // namespace mmeval
