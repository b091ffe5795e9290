#ifdef MMEVAL_WITH_OPENSSL
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

#include "mmeval/error.hpp"
#include "mmeval/gateway.hpp"

namespace mmeval {

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path below the origin, no trailing slash
};

SplitUrl split_url(const std::string& base) {
  const auto scheme_end = base.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::EndpointUnavailable, "base address must include a scheme: " + base);
  }
  const auto path_start = base.find('/', scheme_end + 3);
  SplitUrl out;
  out.origin = base.substr(0, path_start);
  if (path_start != std::string::npos) out.prefix = base.substr(path_start);
  while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
  return out;
}

class HttpTransport final : public Transport {
 public:
  explicit HttpTransport(std::chrono::seconds timeout) : timeout_(timeout) {}

  HttpResult post_json(const std::string& base_url, const std::string& path, const std::string& api_key,
                       const std::string& body) override {
    const auto url = split_url(base_url);
    httplib::Client client(url.origin);
    client.set_connection_timeout(std::chrono::seconds(10));
    client.set_read_timeout(timeout_);
    client.set_write_timeout(timeout_);
    httplib::Headers headers;
    if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);
    auto res = client.Post(url.prefix + path, headers, body, "application/json");
    if (!res) return {0, {}, httplib::to_string(res.error())};
    return {res->status, res->body, {}};
  }

 private:
  std::chrono::seconds timeout_;
};

}  // namespace

std::shared_ptr<Transport> make_http_transport(std::chrono::seconds timeout) {
  return std::make_shared<HttpTransport>(timeout);
}

}  // namespace mmeval
