#include "longeval/extraction.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "longeval/errors.hpp"
#include "longeval/parallel.hpp"
#include "longeval/rouge.hpp"

namespace longeval {
namespace {

std::string join_selected(const Document& doc, std::span<const std::size_t> indices) {
  std::string out;
  for (std::size_t i : indices) {
    if (!out.empty()) out += ' ';
    out += doc.sentences[i].text;
  }
  return out;
}

ExtractedDocument empty_extraction(const Document& doc, const ExtractionMethod& method, Budget budget) {
  ExtractedDocument out;
  out.source_id = doc.id;
  out.method = method;
  out.budget = budget;
  return out;
}

ExtractedDocument lead_token_exact(const Document& doc, Budget budget, const ExtractionMethod& method,
                                   const TokenCounter& counter) {
  ExtractedDocument out = empty_extraction(doc, method, budget);
  std::vector<std::size_t> starts;
  std::string full;
  for (const Sentence& s : doc.sentences) {
    if (!full.empty()) full += ' ';
    starts.push_back(full.size());
    full += s.text;
  }
  out.text = truncate_to_tokens(full, budget.max_tokens(), counter);
  out.token_count = counter.count(out.text);
  for (std::size_t i = 0; i < starts.size() && starts[i] < out.text.size(); ++i) {
    out.sentence_indices.push_back(i);
  }
  return out;
}

// Propagates the lowest-index failure from a parallel scoring pass.
void rethrow_first(const std::vector<std::exception_ptr>& errors) {
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const ProviderError& e) {
      throw ScoringError(i, e.what());
    }
  }
}

}  // namespace

Budget::Budget(std::size_t max_tokens) : max_tokens_(max_tokens) {
  if (max_tokens == 0) throw std::invalid_argument("budget must be at least one token");
}

std::string_view to_string(MethodKind kind) {
  switch (kind) {
    case MethodKind::kLead:
      return "lead";
    case MethodKind::kRouge1:
      return "rouge1";
    case MethodKind::kRouge2:
      return "rouge2";
    case MethodKind::kRouge12:
      return "rouge12";
    case MethodKind::kBertScore:
      return "bertscore";
    case MethodKind::kNli:
      return "nli";
  }
  return "unknown";
}

std::string ExtractionMethod::name() const {
  if (kind == MethodKind::kLead && lead_mode == LeadMode::kTokenExact) return "lead-exact";
  return std::string(to_string(kind));
}

std::optional<ExtractionMethod> ExtractionMethod::parse(std::string_view name) {
  if (name == "lead-exact") return ExtractionMethod{MethodKind::kLead, LeadMode::kTokenExact, {}};
  for (MethodKind kind : kAllMethods) {
    if (to_string(kind) == name) return ExtractionMethod{kind, LeadMode::kSentenceBoundary, {}};
  }
  return std::nullopt;
}

ExtractedDocument extract_lead(const Document& doc, Budget budget, LeadMode mode,
                               const TokenCounter& counter) {
  const ExtractionMethod method{MethodKind::kLead, mode, {}};
  if (doc.sentences.empty()) return empty_extraction(doc, method, budget);
  if (mode == LeadMode::kTokenExact) return lead_token_exact(doc, budget, method, counter);

  std::vector<std::size_t> indices;
  std::size_t used = 0;
  for (const Sentence& s : doc.sentences) {
    if (used + s.token_count > budget.max_tokens()) break;
    used += s.token_count;
    indices.push_back(s.index);
  }

  ExtractedDocument out = empty_extraction(doc, method, budget);
  while (!indices.empty()) {
    out.text = join_selected(doc, indices);
    out.token_count = counter.count(out.text);
    if (out.token_count <= budget.max_tokens()) break;
    indices.pop_back();
  }
  if (indices.empty()) {
    // Sentence 0 alone is over budget: cut it at the token limit instead.
    out.text = truncate_to_tokens(doc.sentences[0].text, budget.max_tokens(), counter);
    out.token_count = counter.count(out.text);
    if (!out.text.empty()) indices.push_back(0);
  }
  out.sentence_indices = std::move(indices);
  return out;
}

std::vector<double> score_sentences(const Document& doc, const GeneratedSummary& summary,
                                    const ExtractionMethod& method,
                                    const SemanticProvider* provider) {
  const std::size_t n = doc.sentences.size();
  std::vector<double> scores(n, 0.0);
  if (method.needs_provider() && provider == nullptr) {
    throw std::invalid_argument("extraction method " + method.name() + " requires a semantic provider");
  }

  switch (method.kind) {
    case MethodKind::kLead:
      // Document order is the ranking.
      for (std::size_t i = 0; i < n; ++i) scores[i] = -static_cast<double>(i);
      break;
    case MethodKind::kRouge1:
    case MethodKind::kRouge2:
    case MethodKind::kRouge12: {
      const auto ref_tokens = rouge::tokenize(summary.text);
      const auto ref1 = rouge::ngrams(ref_tokens, 1);
      const auto ref2 = rouge::ngrams(ref_tokens, 2);
      for (std::size_t i = 0; i < n; ++i) {
        const auto tokens = rouge::tokenize(doc.sentences[i].text);
        const double r1 = method.kind == MethodKind::kRouge2 ? 0.0 : rouge::recall(rouge::ngrams(tokens, 1), ref1);
        const double r2 = method.kind == MethodKind::kRouge1 ? 0.0 : rouge::recall(rouge::ngrams(tokens, 2), ref2);
        scores[i] = r1 + r2;
      }
      break;
    }
    case MethodKind::kBertScore: {
      auto errors = parallel_for(n, provider->max_parallel(), [&](std::size_t i) {
        scores[i] = provider->bertscore_recall(doc.sentences[i].text, summary.text);
      });
      rethrow_first(errors);
      break;
    }
    case MethodKind::kNli: {
      std::vector<std::string> premises;
      for (const Sentence& s : summary.sentences) premises.push_back(s.text);
      if (premises.empty() && !summary.text.empty()) premises.push_back(summary.text);
      if (premises.empty()) break;
      auto errors = parallel_for(n, provider->max_parallel(), [&](std::size_t i) {
        std::vector<TextPair> pairs;
        pairs.reserve(premises.size());
        for (const std::string& p : premises) pairs.push_back({p, doc.sentences[i].text});
        double best = 0.0;
        for (const NliProbs& probs : provider->nli_batch(pairs)) {
          best = std::max(best, probs.entail + probs.contradict);
        }
        scores[i] = best;
      });
      rethrow_first(errors);
      break;
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(scores[i])) throw ScoringError(i, "non-finite sentence score");
  }
  return scores;
}

ExtractedDocument pack_by_score(const Document& doc, std::span<const double> scores, Budget budget,
                                const TokenCounter& counter, std::optional<double> min_score) {
  if (scores.size() != doc.sentences.size()) {
    throw std::invalid_argument("pack_by_score: one score per sentence required");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  std::vector<std::size_t> picked;  // in visiting order
  std::size_t remaining = budget.max_tokens();
  for (std::size_t i : order) {
    if (min_score && scores[i] < *min_score) continue;
    const std::size_t tokens = doc.sentences[i].token_count;
    if (tokens <= remaining) {
      picked.push_back(i);
      remaining -= tokens;
    }
  }

  ExtractedDocument out = empty_extraction(doc, {}, budget);
  for (std::size_t i = 0; i < scores.size(); ++i) out.sentence_scores[i] = scores[i];
  for (;;) {
    out.sentence_indices = picked;
    std::sort(out.sentence_indices.begin(), out.sentence_indices.end());
    out.text = join_selected(doc, out.sentence_indices);
    out.token_count = counter.count(out.text);
    // Only counters whose counts are not additive over " " joins get here.
    if (out.token_count <= budget.max_tokens() || picked.empty()) break;
    picked.pop_back();
  }
  return out;
}

ExtractedDocument extract(const Document& doc, const GeneratedSummary& summary,
                          const ExtractionMethod& method, Budget budget,
                          const TokenCounter& counter, const SemanticProvider* provider) {
  if (method.kind == MethodKind::kLead) return extract_lead(doc, budget, method.lead_mode, counter);
  const std::vector<double> scores = score_sentences(doc, summary, method, provider);
  std::optional<double> min_score;
  if (method.kind == MethodKind::kNli) min_score = method.nli_threshold;
  ExtractedDocument out = pack_by_score(doc, scores, budget, counter, min_score);
  out.method = method;
  return out;
}

}  // namespace longeval
