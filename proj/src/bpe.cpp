#include "longeval/bpe.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <fstream>
#include <limits>
#include <sstream>

#include "longeval/errors.hpp"

namespace longeval {
namespace {

constexpr std::uint32_t kNoRank = std::numeric_limits<std::uint32_t>::max();

bool is_letter(char c) {
  const auto u = static_cast<unsigned char>(c);
  return (u >= 'a' && u <= 'z') || (u >= 'A' && u <= 'Z') || u >= 0x80;
}
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_ws(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}
bool is_newline(char c) { return c == '\n' || c == '\r'; }
bool is_other(char c) { return !is_ws(c) && !is_letter(c) && !is_digit(c); }

char lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

// Length of a contraction suffix ('s 't 're 've 'm 'll 'd) at `pos`, or 0.
std::size_t match_contraction(std::string_view t, std::size_t pos) {
  if (t[pos] != '\'' || pos + 1 >= t.size()) return 0;
  const char a = lower(t[pos + 1]);
  const char b = pos + 2 < t.size() ? lower(t[pos + 2]) : '\0';
  if (a == 's' || a == 't' || a == 'm' || a == 'd') return 2;
  if ((a == 'r' && b == 'e') || (a == 'v' && b == 'e') || (a == 'l' && b == 'l')) return 3;
  return 0;
}

std::size_t match_piece(std::string_view t, std::size_t i) {
  const std::size_t n = t.size();
  if (std::size_t len = match_contraction(t, i); len > 0) return len;

  // [^\r\n\p{L}\p{N}]?\p{L}+
  {
    std::size_t j = i;
    if (!is_newline(t[j]) && !is_letter(t[j]) && !is_digit(t[j])) ++j;
    for (std::size_t start : {j, i}) {
      std::size_t k = start;
      while (k < n && is_letter(t[k])) ++k;
      if (k > start) return k - i;
      if (j == i) break;
    }
  }

  // \p{N}{1,3}
  if (is_digit(t[i])) {
    std::size_t k = i;
    while (k < n && k - i < 3 && is_digit(t[k])) ++k;
    return k - i;
  }

  // ' ?[^\s\p{L}\p{N}]+[\r\n]*'
  {
    std::size_t j = i;
    if (t[j] == ' ' && j + 1 < n && is_other(t[j + 1])) ++j;
    if (is_other(t[j])) {
      while (j < n && is_other(t[j])) ++j;
      while (j < n && is_newline(t[j])) ++j;
      return j - i;
    }
  }

  // Whitespace alternatives: \s*[\r\n]+ | \s+(?!\S) | \s+
  std::size_t run_end = i;
  while (run_end < n && is_ws(t[run_end])) ++run_end;
  std::size_t last_newline = n;
  for (std::size_t k = i; k < run_end; ++k) {
    if (is_newline(t[k])) last_newline = k;
  }
  if (last_newline != n) return last_newline + 1 - i;
  if (run_end == n) return run_end - i;
  if (run_end - i >= 2) return run_end - 1 - i;
  return run_end - i;
}

std::string decode_base64(std::string_view encoded) {
  std::string out(3 * ((encoded.size() + 3) / 4), '\0');
  const int len = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                  reinterpret_cast<const unsigned char*>(encoded.data()),
                                  static_cast<int>(encoded.size()));
  if (len < 0 || encoded.size() % 4 != 0) {
    throw TokenizerError("invalid base64 token '" + std::string(encoded) + "'");
  }
  std::size_t padding = 0;
  for (std::size_t k = encoded.size(); k > 0 && encoded[k - 1] == '='; --k) ++padding;
  out.resize(static_cast<std::size_t>(len) - padding);
  return out;
}

}  // namespace

std::vector<std::string_view> pretokenize(std::string_view text) {
  std::vector<std::string_view> pieces;
  std::size_t i = 0;
  while (i < text.size()) {
    const std::size_t len = match_piece(text, i);
    pieces.push_back(text.substr(i, len));
    i += len;
  }
  return pieces;
}

BpeCounter::BpeCounter(RankTable ranks) : ranks_(std::move(ranks)) {
  for (int b = 0; b < 256; ++b) {
    if (!ranks_.contains(std::string(1, static_cast<char>(b)))) {
      throw TokenizerError("merge table is missing the single-byte token " + std::to_string(b));
    }
  }
}

BpeCounter::RankTable BpeCounter::parse_table(std::string_view contents) {
  RankTable ranks;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < contents.size()) {
    std::size_t eol = contents.find('\n', pos);
    if (eol == std::string_view::npos) eol = contents.size();
    std::string_view line = contents.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;

    const std::size_t space = line.find(' ');
    if (space == std::string_view::npos) {
      throw TokenizerError("merge table line " + std::to_string(line_no) + ": expected '<token> <rank>'");
    }
    std::string_view rank_text = line.substr(space + 1);
    std::uint32_t rank = 0;
    auto [end, ec] = std::from_chars(rank_text.data(), rank_text.data() + rank_text.size(), rank);
    if (ec != std::errc() || end != rank_text.data() + rank_text.size()) {
      throw TokenizerError("merge table line " + std::to_string(line_no) + ": bad rank");
    }
    if (!ranks.emplace(decode_base64(line.substr(0, space)), rank).second) {
      throw TokenizerError("merge table line " + std::to_string(line_no) + ": duplicate token");
    }
  }
  return ranks;
}

BpeCounter BpeCounter::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TokenizerError("cannot open merge table " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return BpeCounter(parse_table(buf.str()));
}

std::uint32_t BpeCounter::rank_of(std::string_view bytes) const {
  auto it = ranks_.find(std::string(bytes));
  return it == ranks_.end() ? kNoRank : it->second;
}

std::vector<std::size_t> BpeCounter::merge_piece(std::string_view piece) const {
  if (piece.size() == 1 || rank_of(piece) != kNoRank) return {piece.size()};

  // parts[i].start is the byte offset of part i; parts[i].rank is the rank of
  // merging part i with part i+1. The final entry is a sentinel at the end.
  struct Part {
    std::size_t start;
    std::uint32_t rank;
  };
  std::vector<Part> parts;
  parts.reserve(piece.size() + 1);
  for (std::size_t i = 0; i <= piece.size(); ++i) parts.push_back({i, kNoRank});

  auto pair_rank = [&](std::size_t i) -> std::uint32_t {
    if (i + 2 >= parts.size()) return kNoRank;
    return rank_of(piece.substr(parts[i].start, parts[i + 2].start - parts[i].start));
  };
  for (std::size_t i = 0; i + 2 < parts.size(); ++i) parts[i].rank = pair_rank(i);

  while (parts.size() > 2) {
    std::uint32_t best = kNoRank;
    std::size_t at = 0;
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
      if (parts[i].rank < best) {
        best = parts[i].rank;
        at = i;
      }
    }
    if (best == kNoRank) break;
    parts.erase(parts.begin() + static_cast<std::ptrdiff_t>(at) + 1);
    parts[at].rank = pair_rank(at);
    if (at > 0) parts[at - 1].rank = pair_rank(at - 1);
  }

  std::vector<std::size_t> lengths;
  lengths.reserve(parts.size() - 1);
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    lengths.push_back(parts[i + 1].start - parts[i].start);
  }
  return lengths;
}

std::size_t BpeCounter::count(std::string_view text) const {
  std::size_t n = 0;
  for (std::string_view piece : pretokenize(text)) n += merge_piece(piece).size();
  return n;
}

std::vector<std::size_t> BpeCounter::token_ends(std::string_view text) const {
  std::vector<std::size_t> ends;
  std::size_t offset = 0;
  for (std::string_view piece : pretokenize(text)) {
    for (std::size_t len : merge_piece(piece)) {
      offset += len;
      ends.push_back(offset);
    }
  }
  return ends;
}

std::vector<std::uint32_t> BpeCounter::encode(std::string_view text) const {
  std::vector<std::uint32_t> out;
  for (std::string_view piece : pretokenize(text)) {
    std::size_t offset = 0;
    for (std::size_t len : merge_piece(piece)) {
      out.push_back(rank_of(piece.substr(offset, len)));
      offset += len;
    }
  }
  return out;
}

}  // namespace longeval
