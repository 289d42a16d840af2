#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "longeval/corpus.hpp"
#include "longeval/semantic.hpp"
#include "longeval/textproc.hpp"

namespace longeval {

// Extracted-document length limits swept by default.
inline constexpr std::array<std::size_t, 8> kBudgetGrid = {128, 256, 512, 768,
                                                           1024, 1536, 2048, 4096};

class Budget {
 public:
  // Throws std::invalid_argument for a zero budget.
  explicit Budget(std::size_t max_tokens);

  std::size_t max_tokens() const { return max_tokens_; }

  bool operator==(const Budget&) const = default;
  auto operator<=>(const Budget&) const = default;

 private:
  std::size_t max_tokens_;
};

enum class MethodKind { kLead, kRouge1, kRouge2, kRouge12, kBertScore, kNli };

inline constexpr std::array<MethodKind, 6> kAllMethods = {
    MethodKind::kLead,   MethodKind::kRouge1,    MethodKind::kRouge2,
    MethodKind::kRouge12, MethodKind::kBertScore, MethodKind::kNli};

enum class LeadMode { kSentenceBoundary, kTokenExact };

struct ExtractionMethod {
  MethodKind kind = MethodKind::kLead;
  LeadMode lead_mode = LeadMode::kSentenceBoundary;
  // NLI only: sentences scoring below this are never selected.
  std::optional<double> nli_threshold;

  bool needs_provider() const {
    return kind == MethodKind::kBertScore || kind == MethodKind::kNli;
  }

  // "lead", "rouge1", "rouge2", "rouge12", "bertscore", "nli"; token-exact
  // lead is "lead-exact".
  std::string name() const;

  // Accepts the names produced by name(). Returns nullopt for anything else.
  static std::optional<ExtractionMethod> parse(std::string_view name);

  bool operator==(const ExtractionMethod&) const = default;
};

std::string_view to_string(MethodKind kind);

struct ExtractedDocument {
  std::string source_id;
  std::vector<std::size_t> sentence_indices;  // ascending
  std::string text;
  std::size_t token_count = 0;
  ExtractionMethod method;
  Budget budget{1};
  std::map<std::size_t, double> sentence_scores;  // empty for LEAD
};

// Leading sentences while the running token total stays within the budget.
// When sentence 0 alone is over budget, or in token-exact mode, returns the
// first `budget` tokens of the document verbatim.
ExtractedDocument extract_lead(const Document& doc, Budget budget, LeadMode mode,
                               const TokenCounter& counter);

// One finite score per source sentence. Provider failures are rethrown as
// ScoringError carrying the sentence index.
std::vector<double> score_sentences(const Document& doc, const GeneratedSummary& summary,
                                    const ExtractionMethod& method,
                                    const SemanticProvider* provider);

// Greedy first-fit packing: visit sentences by descending score (earlier
// sentence first on ties), keep each one that fits the remaining budget, and
// emit the kept sentences in document order.
ExtractedDocument pack_by_score(const Document& doc, std::span<const double> scores, Budget budget,
                                const TokenCounter& counter,
                                std::optional<double> min_score = std::nullopt);

ExtractedDocument extract(const Document& doc, const GeneratedSummary& summary,
                          const ExtractionMethod& method, Budget budget,
                          const TokenCounter& counter, const SemanticProvider* provider = nullptr);

}  // namespace longeval
