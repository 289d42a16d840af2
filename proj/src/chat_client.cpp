#include "longeval/chat_client.hpp"

#include <algorithm>
#include <nlohmann/json.hpp>
#include <regex>

#include "longeval/corpus.hpp"
#include "longeval/errors.hpp"
#include "longeval/prompts.hpp"

namespace longeval {
namespace {

using nlohmann::json;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string_view summary_section(std::string_view prompt) {
  constexpr std::string_view kHeader = "# Generated Summary:\n";
  const std::size_t begin = prompt.rfind(kHeader);
  if (begin == std::string_view::npos) return {};
  const std::size_t start = begin + kHeader.size();
  const std::size_t end = prompt.rfind(kScoreRequestLine);
  if (end == std::string_view::npos || end < start) return prompt.substr(start);
  return prompt.substr(start, end - start);
}

}  // namespace

std::string chat_request_body(const ChatRequest& request) {
  json body;
  body["model"] = request.model;
  body["messages"] = json::array({json{{"role", "user"}, {"content", request.prompt}}});
  body["temperature"] = request.temperature;
  body["n"] = request.n;
  body["max_tokens"] = request.max_tokens;
  return body.dump();
}

ChatResponse parse_chat_response(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error& e) {
    throw JudgeError(std::string("chat response is not valid JSON: ") + e.what(), body);
  }
  if (!j.is_object() || !j.contains("choices") || !j["choices"].is_array() || j["choices"].empty()) {
    throw JudgeError("chat response has no choices", body);
  }
  ChatResponse out;
  for (const json& choice : j["choices"]) {
    const json* content = nullptr;
    if (choice.contains("message") && choice["message"].contains("content")) {
      content = &choice["message"]["content"];
    }
    if (content == nullptr || !content->is_string()) {
      throw JudgeError("chat response choice has no message content", body);
    }
    out.contents.push_back(content->get<std::string>());
  }
  return out;
}

OpenAIChatClient::OpenAIChatClient(OpenAIClientConfig config)
    : config_(std::move(config)),
      base_(http::parse_base_url(config_.base_url)),
      in_flight_(static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, config_.max_parallel))) {
  if (config_.api_key.empty()) throw ConfigError("chat client requires an API key");
}

ChatResponse OpenAIChatClient::complete(const ChatRequest& request) {
  const std::string body = chat_request_body(request);
  const http::Headers headers = {{"Authorization", "Bearer " + config_.api_key}};
  std::string response;
  try {
    response = http::with_retries(config_.retry, [&] {
      in_flight_.acquire();
      struct Release {
        std::counting_semaphore<>& s;
        ~Release() { s.release(); }
      } release{in_flight_};
      return http::post_json(base_, "/v1/chat/completions", body, headers, config_.timeout);
    });
  } catch (const TransportError& e) {
    throw JudgeError(std::string("chat request failed: ") + e.what());
  }
  return parse_chat_response(response);
}

ChatResponse CallbackChatClient::complete(const ChatRequest& request) {
  ++calls_;
  ChatResponse out;
  for (int i = 0; i < std::max(1, request.n); ++i) out.contents.push_back(callback_(request));
  return out;
}

ChatResponse ProxyJudgeClient::complete(const ChatRequest& request) {
  ++calls_;
  static const std::regex kScale(R"(scale of (\d+)-(\d+))");
  std::smatch m;
  Scale scale{1, 5};
  if (std::regex_search(request.prompt, m, kScale)) {
    scale = {std::stoi(m[1].str()), std::stoi(m[2].str())};
  }
  int score = proxy_score(corruption_fraction(summary_section(request.prompt)), scale);
  if (noise_ > 0.0) {
    const std::uint64_t h = splitmix64(fnv1a(request.prompt) ^ splitmix64(seed_));
    const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
    if (u < noise_) score = std::clamp(score + ((splitmix64(h) & 1) ? 1 : -1), scale.min, scale.max);
  }
  ChatResponse out;
  for (int i = 0; i < std::max(1, request.n); ++i) out.contents.push_back(std::to_string(score));
  return out;
}

}  // namespace longeval
