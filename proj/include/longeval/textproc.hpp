#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace longeval {

enum class CounterKind { kWhitespace, kBpe };

std::string_view to_string(CounterKind kind);

// Counts tokens under some tokenization. Implementations are immutable after
// construction and safe to share between threads.
class TokenCounter {
 public:
  virtual ~TokenCounter() = default;

  virtual CounterKind kind() const = 0;
  virtual std::size_t count(std::string_view text) const = 0;

  // Byte offset one past the end of each token of `text`, ascending. The
  // offsets are the token boundaries at which `truncate_to_tokens` may cut.
  virtual std::vector<std::size_t> token_ends(std::string_view text) const = 0;
};

// Counts maximal runs of non-whitespace characters.
class WhitespaceCounter final : public TokenCounter {
 public:
  CounterKind kind() const override { return CounterKind::kWhitespace; }
  std::size_t count(std::string_view text) const override;
  std::vector<std::size_t> token_ends(std::string_view text) const override;
};

// Builds a counter; `bpe_table` is required for CounterKind::kBpe.
std::unique_ptr<TokenCounter> make_counter(CounterKind kind,
                                           const std::filesystem::path& bpe_table = {});

inline std::size_t count_tokens(std::string_view text, const TokenCounter& counter) {
  return counter.count(text);
}

// Longest prefix of `text` ending at a token boundary whose token count does
// not exceed `limit`. Returns `text` unchanged when the limit is not binding.
std::string truncate_to_tokens(std::string_view text, std::size_t limit,
                               const TokenCounter& counter);

struct Sentence {
  std::size_t index = 0;
  std::string text;
  std::size_t token_count = 0;

  bool operator==(const Sentence&) const = default;
};

struct SegmenterConfig {
  std::set<std::string, std::less<>> abbreviations;
  // Pieces shorter than this (after trimming) are merged into a neighbour.
  std::size_t min_sentence_chars = 1;

  static SegmenterConfig defaults();
};

// Splits on . ! ? followed by whitespace and an uppercase letter, digit,
// quote or opening bracket, except after a listed abbreviation. Returns the
// trimmed sentence texts; whitespace-only input yields no sentences.
std::vector<std::string> split_sentences(std::string_view text, const SegmenterConfig& config);

std::vector<Sentence> segment(std::string_view text, const SegmenterConfig& config,
                              const TokenCounter& counter);

// Joins sentence texts with single spaces.
std::string join_sentences(const std::vector<Sentence>& sentences);

}  // namespace longeval
