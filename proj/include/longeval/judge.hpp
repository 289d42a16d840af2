#pragma once

#include <atomic>
#include <cstddef>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "longeval/chat_client.hpp"
#include "longeval/corpus.hpp"
#include "longeval/extraction.hpp"
#include "longeval/prompts.hpp"
#include "longeval/textproc.hpp"

namespace longeval {

class VerdictCache;

struct JudgeConfig {
  std::string model = "gpt-4-0613";
  std::size_t context_limit = 8192;
  std::size_t completion_reserve = 16;
  double temperature = 0.0;
  int n = 1;
  double price_per_1k_input = 0.03;
  // Require the response to be a bare integer instead of scanning for the
  // first integer.
  bool strict_parse = false;
  // Refuse to dispatch once actual spend would exceed this, in dollars.
  std::optional<double> max_spend;

  // Throws ConfigError on inconsistent settings.
  void validate() const;
};

struct AssembledPrompt {
  std::string text;
  std::size_t tokens = 0;
  bool article_truncated = false;
};

// Fills the criterion template. When the prompt would exceed
// context_limit - completion_reserve tokens, only the article is truncated.
// Throws JudgeError if the prompt does not fit even with an empty article.
AssembledPrompt assemble_prompt(std::string_view article, std::string_view summary,
                                const Criterion& criterion, const JudgeConfig& config,
                                const TokenCounter& counter);

// First integer in `raw` (or, when strict, `raw` must be exactly one
// integer), checked against the criterion's scale.
int parse_score(std::string_view raw, const Criterion& criterion, bool strict = false);

// Input-token price only: price_per_1k_input * prompt_tokens / 1000.
double cost_of(std::size_t prompt_tokens, const JudgeConfig& config);

std::string sha256_hex(std::string_view data);

struct JudgeVerdict {
  int score = 0;
  std::vector<int> samples;  // one per returned choice
  CriterionKind criterion = CriterionKind::kConsistency;
  std::size_t prompt_tokens = 0;
  double cost = 0.0;
  std::string raw_response;
  std::string prompt_hash;
  bool cached = false;

  // Mean over samples; equals `score` when n = 1.
  double value() const;
};

struct PreparedJudgement {
  CriterionKind criterion;
  AssembledPrompt prompt;
  std::string prompt_hash;
};

// Runs criterion prompts through a chat client, consulting an optional
// verdict cache. Safe to use from several threads.
class Judge {
 public:
  Judge(JudgeConfig config, ChatClient& client, const TokenCounter& counter,
        VerdictCache* cache = nullptr);

  PreparedJudgement prepare(std::string_view article, std::string_view summary,
                            CriterionKind criterion) const;
  bool is_cached(const PreparedJudgement& prepared) const;
  JudgeVerdict run(const PreparedJudgement& prepared);

  JudgeVerdict judge(std::string_view article, const GeneratedSummary& summary, CriterionKind criterion);
  JudgeVerdict judge(const ExtractedDocument& extracted, const GeneratedSummary& summary,
                     CriterionKind criterion);
  JudgeVerdict judge(const Document& full, const GeneratedSummary& summary, CriterionKind criterion);

  const JudgeConfig& config() const { return config_; }
  const TokenCounter& counter() const { return counter_; }
  std::size_t api_calls() const { return api_calls_.load(); }
  // Cost of dispatched (uncached) prompts.
  double spent() const;

 private:
  std::string cache_key(const PreparedJudgement& prepared) const;

  JudgeConfig config_;
  ChatClient& client_;
  const TokenCounter& counter_;
  VerdictCache* cache_;
  std::atomic<std::size_t> api_calls_{0};
  mutable std::mutex spend_mutex_;
  double spent_ = 0.0;
};

}  // namespace longeval
