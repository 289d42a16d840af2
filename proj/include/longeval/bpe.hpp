#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "longeval/textproc.hpp"

namespace longeval {

// Splits text into the pieces that byte-pair merging operates on, following
// the GPT-4 (cl100k) pre-tokenization pattern. Letters are ASCII letters plus
// any non-ASCII byte; numbers are ASCII digits.
std::vector<std::string_view> pretokenize(std::string_view text);

// Byte-level BPE counter over a rank table in the tiktoken text format: one
// `<base64 token bytes> <rank>` pair per line. Lower rank merges first.
class BpeCounter final : public TokenCounter {
 public:
  using RankTable = std::unordered_map<std::string, std::uint32_t>;

  // Every single byte must have a rank; throws TokenizerError otherwise.
  explicit BpeCounter(RankTable ranks);

  static BpeCounter from_file(const std::filesystem::path& path);
  static RankTable parse_table(std::string_view contents);

  CounterKind kind() const override { return CounterKind::kBpe; }
  std::size_t count(std::string_view text) const override;
  std::vector<std::size_t> token_ends(std::string_view text) const override;

  // Token ranks of `text`, in order.
  std::vector<std::uint32_t> encode(std::string_view text) const;

  std::size_t vocabulary_size() const { return ranks_.size(); }

 private:
  // Byte length of each token of one pre-tokenized piece.
  std::vector<std::size_t> merge_piece(std::string_view piece) const;
  std::uint32_t rank_of(std::string_view bytes) const;

  RankTable ranks_;
};

}  // namespace longeval
