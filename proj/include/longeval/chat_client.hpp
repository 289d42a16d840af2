#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <semaphore>
#include <string>
#include <vector>

#include "longeval/http_util.hpp"

namespace longeval {

struct ChatRequest {
  std::string model;
  std::string prompt;  // sent as a single user message
  double temperature = 0.0;
  int n = 1;
  int max_tokens = 16;
};

struct ChatResponse {
  std::vector<std::string> contents;  // one per choice, in order
};

// Chat-completion backend. Implementations must be safe to call concurrently.
class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual ChatResponse complete(const ChatRequest& request) = 0;
};

struct OpenAIClientConfig {
  std::string base_url = "https://api.openai.com";
  std::string api_key;
  std::chrono::milliseconds timeout{60000};
  std::size_t max_parallel = 4;
  http::RetryPolicy retry{3, std::chrono::milliseconds(1000), std::chrono::milliseconds(30000), true};
};

// Serializes a request body for POST {base}/v1/chat/completions.
std::string chat_request_body(const ChatRequest& request);

// Reads choices[*].message.content; throws JudgeError on a malformed body.
ChatResponse parse_chat_response(const std::string& body);

// OpenAI-compatible chat-completions client. Rate-limit and server errors are
// retried with jittered exponential backoff.
class OpenAIChatClient final : public ChatClient {
 public:
  explicit OpenAIChatClient(OpenAIClientConfig config);

  ChatResponse complete(const ChatRequest& request) override;

 private:
  OpenAIClientConfig config_;
  http::BaseUrl base_;
  std::counting_semaphore<> in_flight_;
};

// Wraps a callable; used for stubs in tests.
class CallbackChatClient final : public ChatClient {
 public:
  using Callback = std::function<std::string(const ChatRequest&)>;

  explicit CallbackChatClient(Callback callback) : callback_(std::move(callback)) {}

  ChatResponse complete(const ChatRequest& request) override;
  std::size_t calls() const { return calls_.load(); }

 private:
  Callback callback_;
  std::atomic<std::size_t> calls_{0};
};

// Offline judge for synthetic corpora. Scores the summary section of the
// prompt with proxy_score() from its corruption-marker fraction, on the scale
// stated in the prompt. With noise > 0, each response is shifted by +-1 with
// that probability, seeded by (seed, prompt) so reruns are reproducible.
class ProxyJudgeClient final : public ChatClient {
 public:
  explicit ProxyJudgeClient(double noise = 0.0, std::uint64_t seed = 0)
      : noise_(noise), seed_(seed) {}

  ChatResponse complete(const ChatRequest& request) override;
  std::size_t calls() const { return calls_.load(); }

 private:
  double noise_;
  std::uint64_t seed_;
  std::atomic<std::size_t> calls_{0};
};

}  // namespace longeval
