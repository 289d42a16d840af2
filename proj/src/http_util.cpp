#include "longeval/http_util.hpp"

#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "longeval/errors.hpp"

namespace longeval::http {

BaseUrl parse_base_url(std::string_view url) {
  const std::size_t scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos) {
    throw ConfigError("endpoint '" + std::string(url) + "' must start with http:// or https://");
  }
  const std::string_view scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw ConfigError("unsupported endpoint scheme '" + std::string(scheme) + "'");
  }
  const std::size_t host_begin = scheme_end + 3;
  const std::size_t path_begin = url.find('/', host_begin);
  BaseUrl out;
  out.origin = std::string(url.substr(0, path_begin));
  if (path_begin != std::string_view::npos) out.path_prefix = std::string(url.substr(path_begin));
  while (!out.path_prefix.empty() && out.path_prefix.back() == '/') out.path_prefix.pop_back();
  if (host_begin >= out.origin.size()) throw ConfigError("endpoint '" + std::string(url) + "' has no host");
  return out;
}

std::chrono::milliseconds backoff_delay(const RetryPolicy& policy, int attempt) {
  double ms = static_cast<double>(policy.initial_backoff.count()) * std::pow(2.0, attempt);
  ms = std::min(ms, static_cast<double>(policy.max_backoff.count()));
  if (policy.jitter) {
    thread_local std::mt19937 rng(std::random_device{}());
    std::uniform_real_distribution<double> dist(0.75, 1.0);
    ms *= dist(rng);
  }
  return std::chrono::milliseconds(static_cast<long long>(ms));
}

std::string post_json(const BaseUrl& base, const std::string& path, const std::string& body,
                      const Headers& headers, std::chrono::milliseconds timeout) {
  httplib::Client client(base.origin);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  httplib::Headers h;
  for (const auto& [k, v] : headers) h.emplace(k, v);

  auto res = client.Post(base.path_prefix + path, h, body, "application/json");
  if (!res) {
    throw TransportError("POST " + base.origin + base.path_prefix + path + " failed: " +
                         httplib::to_string(res.error()));
  }
  if (res->status >= 200 && res->status < 300) return res->body;
  const bool retryable = res->status == 429 || res->status >= 500;
  throw TransportError("POST " + base.path_prefix + path + " returned HTTP " +
                           std::to_string(res->status) + ": " + res->body.substr(0, 200),
                       res->status, retryable);
}

}  // namespace longeval::http
