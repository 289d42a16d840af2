#include "longeval/judge.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numeric>

#include "longeval/errors.hpp"
#include "longeval/verdict_cache.hpp"

namespace longeval {

void JudgeConfig::validate() const {
  if (model.empty()) throw ConfigError("judge model must not be empty");
  if (completion_reserve < 1) throw ConfigError("completion_reserve must be at least 1");
  if (context_limit <= completion_reserve) {
    throw ConfigError("context_limit must exceed completion_reserve");
  }
  if (n < 1) throw ConfigError("n must be at least 1");
  if (!(temperature >= 0.0)) throw ConfigError("temperature must be non-negative");
  if (!(price_per_1k_input >= 0.0)) throw ConfigError("price_per_1k_input must be non-negative");
  if (max_spend && !(*max_spend >= 0.0)) throw ConfigError("max_spend must be non-negative");
}

AssembledPrompt assemble_prompt(std::string_view article, std::string_view summary,
                                const Criterion& criterion, const JudgeConfig& config,
                                const TokenCounter& counter) {
  const std::size_t limit = config.context_limit - config.completion_reserve;
  AssembledPrompt out;
  out.text = render_prompt(criterion.prompt_template, article, summary);
  out.tokens = counter.count(out.text);
  if (out.tokens <= limit) return out;

  const std::string bare = render_prompt(criterion.prompt_template, "", summary);
  const std::size_t bare_tokens = counter.count(bare);
  if (bare_tokens > limit) {
    throw JudgeError("prompt without article needs " + std::to_string(bare_tokens) +
                     " tokens, over the limit of " + std::to_string(limit));
  }

  out.article_truncated = true;
  std::size_t article_limit = limit - bare_tokens;
  for (;;) {
    const std::string cut = truncate_to_tokens(article, article_limit, counter);
    out.text = render_prompt(criterion.prompt_template, cut, summary);
    out.tokens = counter.count(out.text);
    if (out.tokens <= limit) return out;
    const std::size_t over = out.tokens - limit;
    article_limit = article_limit > over ? article_limit - over : 0;
  }
}

int parse_score(std::string_view raw, const Criterion& criterion, bool strict) {
  std::string_view digits;
  bool negative = false;
  if (strict) {
    std::string_view t = raw;
    while (!t.empty() && std::isspace(static_cast<unsigned char>(t.front()))) t.remove_prefix(1);
    while (!t.empty() && std::isspace(static_cast<unsigned char>(t.back()))) t.remove_suffix(1);
    if (!t.empty() && (t.front() == '-' || t.front() == '+')) {
      negative = t.front() == '-';
      t.remove_prefix(1);
    }
    if (t.empty() || !std::all_of(t.begin(), t.end(), [](unsigned char c) { return std::isdigit(c); })) {
      throw JudgeError("response is not a bare integer", std::string(raw));
    }
    digits = t;
  } else {
    std::size_t i = 0;
    while (i < raw.size() && !std::isdigit(static_cast<unsigned char>(raw[i]))) ++i;
    if (i == raw.size()) throw JudgeError("no integer in response", std::string(raw));
    std::size_t j = i;
    while (j < raw.size() && std::isdigit(static_cast<unsigned char>(raw[j]))) ++j;
    negative = i > 0 && raw[i - 1] == '-';
    digits = raw.substr(i, j - i);
  }

  long long value = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
  if (ec != std::errc() || negative) value = negative ? -1 : criterion.scale.max + 1LL;
  if (value < criterion.scale.min || value > criterion.scale.max) {
    throw JudgeError("score " + std::string(negative ? "-" : "") + std::string(digits) +
                         " outside the " + std::string(criterion.name()) + " scale " +
                         std::to_string(criterion.scale.min) + "-" + std::to_string(criterion.scale.max),
                     std::string(raw));
  }
  return static_cast<int>(value);
}

double cost_of(std::size_t prompt_tokens, const JudgeConfig& config) {
  return config.price_per_1k_input * static_cast<double>(prompt_tokens) / 1000.0;
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xf];
  }
  return out;
}

double JudgeVerdict::value() const {
  if (samples.empty()) return score;
  return std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(samples.size());
}

Judge::Judge(JudgeConfig config, ChatClient& client, const TokenCounter& counter, VerdictCache* cache)
    : config_(std::move(config)), client_(client), counter_(counter), cache_(cache) {
  config_.validate();
}

PreparedJudgement Judge::prepare(std::string_view article, std::string_view summary,
                                 CriterionKind kind) const {
  const Criterion& c = criterion(kind);
  PreparedJudgement p{kind, assemble_prompt(article, summary, c, config_, counter_), {}};
  p.prompt_hash = sha256_hex(p.prompt.text);
  return p;
}

std::string Judge::cache_key(const PreparedJudgement& prepared) const {
  return sha256_hex(config_.model + '\n' + std::to_string(config_.temperature) + '\n' +
                    std::to_string(config_.n) + '\n' + prepared.prompt_hash);
}

bool Judge::is_cached(const PreparedJudgement& prepared) const {
  return cache_ != nullptr && cache_->get(cache_key(prepared)).has_value();
}

double Judge::spent() const {
  std::lock_guard lock(spend_mutex_);
  return spent_;
}

JudgeVerdict Judge::run(const PreparedJudgement& prepared) {
  const Criterion& c = criterion(prepared.criterion);
  const std::string key = cache_ ? cache_key(prepared) : std::string();
  if (cache_) {
    if (auto hit = cache_->get(key); hit && hit->criterion == prepared.criterion &&
                                     c.scale.contains(hit->score)) {
      return *hit;
    }
  }

  const double cost = cost_of(prepared.prompt.tokens, config_);
  {
    std::lock_guard lock(spend_mutex_);
    if (config_.max_spend && spent_ + cost > *config_.max_spend) {
      throw JudgeError("spend cap of $" + std::to_string(*config_.max_spend) + " reached");
    }
    spent_ += cost;
  }

  ChatRequest request;
  request.model = config_.model;
  request.prompt = prepared.prompt.text;
  request.temperature = config_.temperature;
  request.n = config_.n;
  request.max_tokens = static_cast<int>(config_.completion_reserve);
  ++api_calls_;
  const ChatResponse response = client_.complete(request);
  if (response.contents.empty()) throw JudgeError("chat response has no choices");

  JudgeVerdict v;
  v.criterion = prepared.criterion;
  v.prompt_tokens = prepared.prompt.tokens;
  v.cost = cost;
  v.prompt_hash = prepared.prompt_hash;
  v.raw_response = response.contents.front();
  for (const std::string& content : response.contents) {
    v.samples.push_back(parse_score(content, c, config_.strict_parse));
  }
  v.score = v.samples.size() == 1 ? v.samples.front() : static_cast<int>(std::lround(v.value()));

  if (cache_) cache_->put(key, v);
  return v;
}

JudgeVerdict Judge::judge(std::string_view article, const GeneratedSummary& summary,
                          CriterionKind criterion) {
  return run(prepare(article, summary.text, criterion));
}

JudgeVerdict Judge::judge(const ExtractedDocument& extracted, const GeneratedSummary& summary,
                          CriterionKind criterion) {
  return judge(extracted.text, summary, criterion);
}

JudgeVerdict Judge::judge(const Document& full, const GeneratedSummary& summary,
                          CriterionKind criterion) {
  return judge(full.text, summary, criterion);
}

}  // namespace longeval
