#pragma once

#include <chrono>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "longeval/errors.hpp"

namespace longeval::http {

// "https://host:port/prefix" split into the origin understood by the HTTP
// client and a path prefix without a trailing slash.
struct BaseUrl {
  std::string origin;
  std::string path_prefix;
};

BaseUrl parse_base_url(std::string_view url);

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{200};
  std::chrono::milliseconds max_backoff{8000};
  bool jitter = false;
};

// initial * 2^attempt capped at max; with jitter, scaled into [0.75, 1].
std::chrono::milliseconds backoff_delay(const RetryPolicy& policy, int attempt);

using Headers = std::vector<std::pair<std::string, std::string>>;

// POSTs a JSON body and returns the response body for 2xx statuses. Throws
// TransportError: retryable for connection failures, 429 and 5xx; not
// retryable for other statuses.
std::string post_json(const BaseUrl& base, const std::string& path, const std::string& body,
                      const Headers& headers, std::chrono::milliseconds timeout);

// Calls fn() until it succeeds, a non-retryable TransportError is thrown, or
// the retry budget is spent. Other exceptions propagate immediately.
template <typename Fn>
auto with_retries(const RetryPolicy& policy, Fn&& fn) -> decltype(fn()) {
  for (int attempt = 0;; ++attempt) {
    try {
      return fn();
    } catch (const TransportError& e) {
      if (!e.retryable() || attempt >= policy.max_retries) throw;
    }
    std::this_thread::sleep_for(backoff_delay(policy, attempt));
  }
}

}  // namespace longeval::http
