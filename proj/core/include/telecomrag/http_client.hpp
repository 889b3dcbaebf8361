#pragma once

#include <chrono>
#include <optional>
#include <string>

namespace telecomrag::http {

struct RetryPolicy {
  std::chrono::milliseconds timeout{30000};
  int max_retries = 3;
  // Delay before retry i (0-based) is backoff_base * 2^i.
  std::chrono::milliseconds backoff_base{500};
};

/// POSTs a JSON body to `base_url` + `path` and returns the response body.
/// HTTP 429, 5xx and transport failures are retried; anything else non-2xx
/// fails immediately. Throws ProviderError once retries are exhausted.
std::string post_json(const std::string& base_url, const std::string& path, const std::string& body,
                      const std::optional<std::string>& bearer_token, const RetryPolicy& policy);

/// Value of the environment variable `name`, or nullopt when unset/empty.
std::optional<std::string> env_value(const std::string& name);

}  // namespace telecomrag::http
