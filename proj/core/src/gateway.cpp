#include "mmeval/gateway.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <unordered_map>

#include <json.hpp>

#include "mmeval/error.hpp"
#include "mmeval/hashing.hpp"

namespace mmeval {

using json = nlohmann::json;

namespace {

constexpr std::size_t kEmbedBatch = 32;

class InflightSlot {
 public:
  explicit InflightSlot(std::counting_semaphore<1024>& sem) : sem_(sem) { sem_.acquire(); }
  ~InflightSlot() { sem_.release(); }
  InflightSlot(const InflightSlot&) = delete;
  InflightSlot& operator=(const InflightSlot&) = delete;

 private:
  std::counting_semaphore<1024>& sem_;
};

bool is_transient(int status) { return status == 0 || status == 408 || status == 429 || status >= 500; }

std::string mime_for(const std::filesystem::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".png") return "image/png";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".gif") return "image/gif";
  if (ext == ".webp") return "image/webp";
  return "application/octet-stream";
}

std::string local_path(const std::string& locator) {
  constexpr std::string_view kFile = "file://";
  if (locator.starts_with(kFile)) return locator.substr(kFile.size());
  return locator;
}

// Remote locators go through verbatim; local files are inlined as base64.
std::string image_payload(const std::string& locator) {
  if (is_remote_locator(locator)) return locator;
  const auto path = local_path(locator);
  std::string bytes;
  try {
    bytes = read_file_bytes(path);
  } catch (const Error&) {
    throw Error(ErrorCode::IoError, "cannot read image " + locator, locator);
  }
  return "data:" + mime_for(path) + ";base64," + base64_encode(bytes);
}

json decoding_json(const DecodingParams& d) {
  return json{{"temperature", d.temperature()}, {"sampling", d.sampling()}, {"max_tokens", d.max_tokens()}};
}

std::string extract_content(const std::string& body) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::parse_error&) {
    throw Error(ErrorCode::MalformedResponse, "chat response is not JSON");
  }
  try {
    const auto& content = doc.at("choices").at(0).at("message").at("content");
    if (content.is_string()) return content.get<std::string>();
    if (content.is_array()) {
      std::string text;
      for (const auto& part : content) {
        if (part.value("type", "") == "text") text += part.at("text").get<std::string>();
      }
      return text;
    }
  } catch (const json::exception&) {
  }
  throw Error(ErrorCode::MalformedResponse, "chat response lacks choices[0].message.content");
}

std::string env_or(const char* name, const std::string& fallback = {}) {
  const char* v = std::getenv(name);
  return (v != nullptr && *v != '\0') ? std::string(v) : fallback;
}

}  // namespace

std::string_view to_string(EndpointRole role) {
  switch (role) {
    case EndpointRole::TextJudge: return "text_judge";
    case EndpointRole::VisionJudge: return "vision_judge";
    case EndpointRole::Embedder: return "embedder";
  }
  return "unknown";
}

DecodingParams::DecodingParams(int max_tokens) : max_tokens_(max_tokens) {
  if (max_tokens <= 0) throw Error(ErrorCode::InvalidArgument, "max_tokens must be positive");
}

bool is_remote_locator(const std::string& locator) {
  return locator.starts_with("http://") || locator.starts_with("https://") || locator.starts_with("data:");
}

std::string image_content_hash(const std::string& locator) {
  if (is_remote_locator(locator)) return sha256_hex("url:" + locator);
  try {
    return sha256_file_hex(local_path(locator));
  } catch (const Error&) {
    throw Error(ErrorCode::IoError, "cannot read image " + locator, locator);
  }
}

CacheKey CacheKey::for_request(const JudgeRequest& request) {
  json messages = json::array();
  for (const auto& m : request.messages) {
    json images = json::array();
    for (const auto& loc : m.image_locators) images.push_back(image_content_hash(loc));
    messages.push_back(json{{"role", m.role}, {"text", m.text}, {"images", images}});
  }
  // nlohmann::json objects serialize with sorted keys, giving a canonical form.
  json canonical{{"kind", "chat"},
                 {"role", std::string(to_string(request.role))},
                 {"model", request.model_name},
                 {"messages", messages},
                 {"decoding", decoding_json(request.decoding)}};
  return {sha256_hex(canonical.dump())};
}

CacheKey CacheKey::for_embedding(const std::string& model_name, const std::string& image_hash) {
  json canonical{{"kind", "embedding"}, {"role", "embedder"}, {"model", model_name}, {"image", image_hash}};
  return {sha256_hex(canonical.dump())};
}

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::filesystem::path ResponseCache::path_for(const CacheKey& key) const {
  return dir_ / key.digest.substr(0, 2) / (key.digest + ".json");
}

std::optional<std::string> ResponseCache::get(const CacheKey& key) const {
  const auto p = path_for(key);
  std::error_code ec;
  if (!std::filesystem::exists(p, ec)) return std::nullopt;
  try {
    return read_file_bytes(p);
  } catch (const Error&) {
    return std::nullopt;
  }
}

void ResponseCache::put(const CacheKey& key, const std::string& payload) const {
  write_file_atomic(path_for(key), payload);
}

GatewayConfig GatewayConfig::from_environment() {
  GatewayConfig cfg;
  cfg.text_judge = {env_or("JUDGE_API_BASE"), env_or("JUDGE_API_KEY")};
  cfg.vision_judge = cfg.text_judge;
  cfg.embedder = {env_or("EMBED_API_BASE"), env_or("EMBED_API_KEY")};
  if (auto dir = env_or("MMEVAL_CACHE_DIR"); !dir.empty()) cfg.cache_dir = dir;
  if (auto n = env_or("MMEVAL_MAX_INFLIGHT"); !n.empty()) {
    try {
      cfg.max_inflight = static_cast<std::size_t>(std::stoul(n));
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument, "MMEVAL_MAX_INFLIGHT must be a positive integer");
    }
  }
  return cfg;
}

JudgeGateway::JudgeGateway(GatewayConfig config, std::shared_ptr<Transport> transport)
    : config_(std::move(config)),
      transport_(transport ? std::move(transport) : make_http_transport(config_.timeout)),
      inflight_(static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(config_.max_inflight, 1, 1024))) {
  if (config_.max_attempts < 1) throw Error(ErrorCode::InvalidArgument, "max_attempts must be >= 1");
  if (config_.cache_dir) cache_.emplace(*config_.cache_dir);
}

JudgeGateway::Stats JudgeGateway::stats() const {
  std::lock_guard lock(mutex_);
  return stats_;
}

const EndpointConfig& JudgeGateway::endpoint_for(EndpointRole role) const {
  switch (role) {
    case EndpointRole::TextJudge: return config_.text_judge;
    case EndpointRole::VisionJudge: return config_.vision_judge;
    case EndpointRole::Embedder: return config_.embedder;
  }
  return config_.text_judge;
}

std::string JudgeGateway::post_with_retry(const EndpointConfig& endpoint, const std::string& path,
                                          const std::string& body, EndpointRole role) {
  if (endpoint.base_url.empty()) {
    throw Error(ErrorCode::EndpointUnavailable, std::string("no base address configured for ") +
                                                    std::string(to_string(role)));
  }
  std::string last_error;
  for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
    HttpResult result;
    {
      InflightSlot slot(inflight_);
      result = transport_->post_json(endpoint.base_url, path, endpoint.api_key, body);
    }
    {
      std::lock_guard lock(mutex_);
      ++stats_.network_requests;
      if (attempt > 1) ++stats_.retries;
    }
    if (result.status >= 200 && result.status < 300) return result.body;
    if (result.status == 0) {
      last_error = "transport error: " + result.transport_error;
    } else {
      last_error = "HTTP " + std::to_string(result.status) + ": " + result.body.substr(0, 512);
    }
    if (!is_transient(result.status)) {
      // Non-retryable rejection; the body travels as detail so callers can
      // recover a per-input error index.
      throw Error(ErrorCode::EndpointUnavailable, endpoint.base_url + path + " " + last_error, result.body);
    }
    if (attempt < config_.max_attempts) {
      auto delay = config_.backoff_initial * (1LL << std::min(attempt - 1, 20));
      std::this_thread::sleep_for(std::min<std::chrono::milliseconds>(delay, config_.backoff_cap));
    }
  }
  throw Error(ErrorCode::EndpointUnavailable,
              endpoint.base_url + path + " failed after " + std::to_string(config_.max_attempts) +
                  " attempts; last: " + last_error);
}

JudgeResponse JudgeGateway::complete(const JudgeRequest& request) {
  const auto key = CacheKey::for_request(request);
  if (cache_) {
    if (auto hit = cache_->get(key)) {
      try {
        auto doc = json::parse(*hit);
        std::lock_guard lock(mutex_);
        ++stats_.cache_hits;
        return {doc.at("raw_text").get<std::string>(), true, 0};
      } catch (const json::exception&) {
        // Unreadable entry: fall through and refresh it.
      }
    }
  }

  json messages = json::array();
  for (const auto& m : request.messages) {
    if (m.image_locators.empty()) {
      messages.push_back(json{{"role", m.role}, {"content", m.text}});
      continue;
    }
    json parts = json::array();
    parts.push_back(json{{"type", "text"}, {"text", m.text}});
    for (const auto& loc : m.image_locators) {
      parts.push_back(json{{"type", "image_url"}, {"image_url", json{{"url", image_payload(loc)}}}});
    }
    messages.push_back(json{{"role", m.role}, {"content", parts}});
  }
  json body{{"model", request.model_name},
            {"messages", messages},
            {"temperature", request.decoding.temperature()},
            {"top_p", 1.0},
            {"n", 1},
            {"max_tokens", request.decoding.max_tokens()},
            {"stream", false}};

  const auto start = std::chrono::steady_clock::now();
  const auto payload = post_with_retry(endpoint_for(request.role), "/chat/completions", body.dump(), request.role);
  const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);

  JudgeResponse response{extract_content(payload), false, static_cast<std::uint64_t>(elapsed.count())};
  if (cache_) cache_->put(key, json{{"raw_text", response.raw_text}}.dump());
  return response;
}

std::vector<std::vector<double>> JudgeGateway::embed_images(std::span<const std::string> locators,
                                                            const std::string& model_name) {
  if (locators.empty()) throw Error(ErrorCode::InvalidArgument, "embed_images needs at least one locator");

  std::vector<std::string> hashes;
  hashes.reserve(locators.size());
  for (const auto& loc : locators) hashes.push_back(image_content_hash(loc));

  std::unordered_map<std::string, std::vector<double>> rows;
  std::vector<std::size_t> missing;  // first index of each uncached hash
  for (std::size_t i = 0; i < locators.size(); ++i) {
    if (rows.contains(hashes[i])) continue;
    bool found = false;
    if (cache_) {
      if (auto hit = cache_->get(CacheKey::for_embedding(model_name, hashes[i]))) {
        try {
          rows[hashes[i]] = json::parse(*hit).get<std::vector<double>>();
          found = true;
          std::lock_guard lock(mutex_);
          ++stats_.cache_hits;
        } catch (const json::exception&) {
        }
      }
    }
    if (!found) {
      rows[hashes[i]] = {};
      missing.push_back(i);
    }
  }

  for (std::size_t start = 0; start < missing.size(); start += kEmbedBatch) {
    const std::size_t end = std::min(missing.size(), start + kEmbedBatch);
    json inputs = json::array();
    for (std::size_t j = start; j < end; ++j) inputs.push_back(image_payload(locators[missing[j]]));
    json body{{"model", model_name}, {"input", inputs}, {"encoding_format", "float"}};

    auto failing_locator = [&](const json& err) -> std::string {
      if (err.is_object() && err.contains("index") && err["index"].is_number_integer()) {
        auto idx = err["index"].get<std::size_t>();
        if (idx < end - start) return locators[missing[start + idx]];
      }
      return {};
    };

    std::string payload;
    try {
      payload = post_with_retry(config_.embedder, "/embeddings", body.dump(), EndpointRole::Embedder);
    } catch (const Error& e) {
      std::string locator;
      try {
        auto doc = json::parse(e.detail());
        locator = failing_locator(doc.contains("error") ? doc["error"] : doc);
      } catch (const json::exception&) {
      }
      if (locator.empty()) throw;
      throw Error(ErrorCode::EndpointUnavailable, "embedder rejected image " + locator + ": " + e.what(), locator);
    }

    json doc;
    try {
      doc = json::parse(payload);
    } catch (const json::parse_error&) {
      throw Error(ErrorCode::MalformedResponse, "embeddings response is not JSON");
    }
    if (!doc.contains("data") || !doc["data"].is_array() || doc["data"].size() != end - start) {
      throw Error(ErrorCode::MalformedResponse, "embeddings response must carry one data entry per input");
    }
    for (std::size_t pos = 0; pos < doc["data"].size(); ++pos) {
      const auto& item = doc["data"][pos];
      const std::size_t idx = item.contains("index") ? item["index"].get<std::size_t>() : pos;
      if (idx >= end - start) throw Error(ErrorCode::MalformedResponse, "embedding index out of range");
      const auto& locator = locators[missing[start + idx]];
      if (item.contains("error")) {
        throw Error(ErrorCode::EndpointUnavailable, "embedder rejected image " + locator + ": " + item["error"].dump(),
                    locator);
      }
      std::vector<double> vec;
      try {
        vec = item.at("embedding").get<std::vector<double>>();
      } catch (const json::exception&) {
        throw Error(ErrorCode::MalformedResponse, "embedding entry lacks a numeric vector");
      }
      const auto& h = hashes[missing[start + idx]];
      if (cache_) cache_->put(CacheKey::for_embedding(model_name, h), json(vec).dump());
      rows[h] = std::move(vec);
    }
  }

  std::vector<std::vector<double>> out;
  out.reserve(locators.size());
  for (const auto& h : hashes) out.push_back(rows.at(h));

  const std::size_t d = out.front().size();
  if (d == 0) throw Error(ErrorCode::MalformedResponse, "empty embedding vector");
  for (const auto& r : out) {
    if (r.size() != d) {
      throw Error(ErrorCode::EmbeddingDimensionMismatch,
                  "embedding rows of unequal length " + std::to_string(r.size()) + " vs " + std::to_string(d));
    }
  }
  std::lock_guard lock(mutex_);
  auto [it, inserted] = embedding_dims_.emplace(model_name, d);
  if (!inserted && it->second != d) {
    throw Error(ErrorCode::EmbeddingDimensionMismatch, "model " + model_name + " changed dimension from " +
                                                           std::to_string(it->second) + " to " + std::to_string(d));
  }
  return out;
}

std::string JudgeHandle::ask(const std::string& prompt, const std::vector<std::string>& images) const {
  if (gateway == nullptr) throw Error(ErrorCode::InvalidArgument, "judge handle has no gateway");
  JudgeRequest req{role, model, {ChatMessage{"user", prompt, images}}, decoding};
  return gateway->complete(req).raw_text;
}

}  // namespace mmeval
