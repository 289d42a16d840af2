#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace longeval::rouge {

// Lowercases ASCII letters and strips leading and trailing punctuation.
// Punctuation-only tokens normalize to the empty string.
std::string normalize_token(std::string_view token);

// Whitespace split followed by normalize_token; empty tokens are dropped.
std::vector<std::string> tokenize(std::string_view text);

// Multiset of n-grams keyed by the tokens joined with U+001F.
struct NgramMultiset {
  int order = 1;
  std::unordered_map<std::string, std::size_t> counts;

  std::size_t total() const;
};

// Normalizes `tokens` before counting. Throws std::invalid_argument unless
// order is 1 or 2.
NgramMultiset ngrams(std::span<const std::string> tokens, int order);

// Sum over n-grams of min(candidate count, reference count).
std::size_t clipped_overlap(const NgramMultiset& candidate, const NgramMultiset& reference);

struct RougeScore {
  double recall = 0.0;
  double precision = 0.0;
  double f1 = 0.0;
};

RougeScore score(const NgramMultiset& candidate, const NgramMultiset& reference);

// Clipped overlap over the reference's n-gram count; 0 for an empty reference.
double recall(std::span<const std::string> candidate, std::span<const std::string> reference,
              int order);
double recall(const NgramMultiset& candidate, const NgramMultiset& reference);

// ROUGE-1 recall plus ROUGE-2 recall, in [0, 2].
double combined(std::span<const std::string> candidate, std::span<const std::string> reference);

RougeScore f1(std::span<const std::string> candidate, std::span<const std::string> reference,
              int order);
RougeScore f1(std::string_view candidate, std::string_view reference, int order);

}  // namespace longeval::rouge
