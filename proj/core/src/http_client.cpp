#include "telecomrag/http_client.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <regex>
#include <thread>

#include "telecomrag/errors.hpp"

namespace telecomrag::http {
namespace {

constexpr std::size_t kExcerptBytes = 256;

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path prefix without trailing slash
};

Endpoint split_base_url(const std::string& base_url) {
  static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(base_url, m, kUrl)) throw InvalidParams("invalid base_url: " + base_url);
  std::string prefix = m[2].matched ? m[2].str() : std::string{};
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {m[1].str(), prefix};
}

bool is_transient(int status) { return status == 429 || status >= 500; }

}  // namespace

std::optional<std::string> env_value(const std::string& name) {
  if (name.empty()) return std::nullopt;
  const char* v = std::getenv(name.c_str());
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::string(v);
}

std::string post_json(const std::string& base_url, const std::string& path, const std::string& body,
                      const std::optional<std::string>& bearer_token, const RetryPolicy& policy) {
  const Endpoint ep = split_base_url(base_url);
  httplib::Client client(ep.origin);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(policy.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(policy.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  httplib::Headers headers;
  if (bearer_token) headers.emplace("Authorization", "Bearer " + *bearer_token);

  const std::string target = ep.prefix + path;
  int last_status = 0;
  std::string last_excerpt;
  for (int attempt = 0; attempt <= policy.max_retries; ++attempt) {
    if (attempt > 0) {
      const auto delay = policy.backoff_base * (1LL << (attempt - 1));
      std::this_thread::sleep_for(delay);
    }
    auto res = client.Post(target, headers, body, "application/json");
    if (!res) {
      last_status = 0;
      last_excerpt = httplib::to_string(res.error());
      spdlog::warn("POST {}{} failed: {} (attempt {})", ep.origin, target, last_excerpt, attempt + 1);
      continue;
    }
    if (res->status >= 200 && res->status < 300) return res->body;
    last_status = res->status;
    last_excerpt = res->body.substr(0, kExcerptBytes);
    if (!is_transient(res->status)) break;
    spdlog::warn("POST {}{} returned {} (attempt {})", ep.origin, target, res->status, attempt + 1);
  }
  throw ProviderError(last_status, last_excerpt);
}

}  // namespace telecomrag::http
