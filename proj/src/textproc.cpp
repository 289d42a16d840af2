#include "longeval/textproc.hpp"

#include <algorithm>
#include <cctype>
#include <utility>

#include "longeval/bpe.hpp"
#include "longeval/errors.hpp"

namespace longeval {
namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool is_terminal(char c) { return c == '.' || c == '!' || c == '?'; }

bool starts_with_at(std::string_view text, std::size_t pos, std::string_view what) {
  return text.substr(pos, what.size()) == what;
}

// Closing quotes and brackets that may trail terminal punctuation.
std::size_t closer_length(std::string_view text, std::size_t pos) {
  const char c = text[pos];
  if (c == '"' || c == '\'' || c == ')' || c == ']') return 1;
  if (starts_with_at(text, pos, "’") || starts_with_at(text, pos, "”")) return 3;
  return 0;
}

bool opens_sentence(std::string_view text, std::size_t pos) {
  const auto c = static_cast<unsigned char>(text[pos]);
  if (std::isupper(c) || std::isdigit(c)) return true;
  if (c == '"' || c == '\'' || c == '(' || c == '[') return true;
  return starts_with_at(text, pos, "“") || starts_with_at(text, pos, "‘");
}

std::string_view trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

// The whitespace-delimited word ending at `end` (exclusive), with leading
// opening quotes and brackets removed.
std::string_view word_before(std::string_view text, std::size_t end) {
  std::size_t begin = end;
  while (begin > 0 && !is_space(text[begin - 1])) --begin;
  std::string_view word = text.substr(begin, end - begin);
  while (!word.empty() && (word.front() == '"' || word.front() == '\'' ||
                           word.front() == '(' || word.front() == '[')) {
    word.remove_prefix(1);
  }
  return word;
}

struct Span {
  std::size_t begin;
  std::size_t end;
};

}  // namespace

std::string_view to_string(CounterKind kind) {
  return kind == CounterKind::kBpe ? "bpe" : "whitespace";
}

std::size_t WhitespaceCounter::count(std::string_view text) const {
  std::size_t n = 0;
  bool in_run = false;
  for (char c : text) {
    const bool space = is_space(c);
    if (!space && !in_run) ++n;
    in_run = !space;
  }
  return n;
}

std::vector<std::size_t> WhitespaceCounter::token_ends(std::string_view text) const {
  std::vector<std::size_t> ends;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (!is_space(text[i]) && (i + 1 == text.size() || is_space(text[i + 1]))) {
      ends.push_back(i + 1);
    }
  }
  return ends;
}

std::unique_ptr<TokenCounter> make_counter(CounterKind kind,
                                           const std::filesystem::path& bpe_table) {
  if (kind == CounterKind::kWhitespace) return std::make_unique<WhitespaceCounter>();
  if (bpe_table.empty()) throw TokenizerError("bpe token counter requires a merge table path");
  return std::make_unique<BpeCounter>(BpeCounter::from_file(bpe_table));
}

std::string truncate_to_tokens(std::string_view text, std::size_t limit,
                               const TokenCounter& counter) {
  const std::vector<std::size_t> ends = counter.token_ends(text);
  if (ends.size() <= limit) return std::string(text);
  // Re-tokenizing a prefix can differ from the prefix of the tokenization
  // for merge-based counters, so verify and back off.
  for (std::size_t k = limit; k > 0; --k) {
    std::string_view prefix = text.substr(0, ends[k - 1]);
    if (counter.count(prefix) <= limit) return std::string(prefix);
  }
  return {};
}

SegmenterConfig SegmenterConfig::defaults() {
  SegmenterConfig config;
  config.abbreviations = {
      "Mr.",   "Mrs.",  "Ms.",   "Dr.",  "Prof.", "Sr.",  "Jr.",  "St.",  "Mt.",
      "vs.",   "etc.",  "e.g.",  "i.e.", "al.",   "cf.",  "Fig.", "Figs.", "Eq.",
      "Eqs.",  "No.",   "Nos.",  "Vol.", "pp.",   "Sec.", "Ch.",  "Inc.", "Ltd.",
      "Co.",   "Corp.", "U.S.",  "U.K.", "Jan.",  "Feb.", "Mar.", "Apr.", "Jun.",
      "Jul.",  "Aug.",  "Sep.",  "Sept.", "Oct.", "Nov.", "Dec.", "approx.", "Gen.",
      "Gov.",  "Sen.",  "Rep.",  "Rev.", "Ref.",  "Refs."};
  return config;
}

std::vector<std::string> split_sentences(std::string_view text, const SegmenterConfig& config) {
  std::vector<Span> spans;
  const std::size_t n = text.size();
  std::size_t start = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!is_terminal(text[i])) continue;
    std::size_t j = i + 1;
    while (j < n && is_terminal(text[j])) ++j;
    for (std::size_t len; j < n && (len = closer_length(text, j)) > 0;) j += len;
    if (j >= n || !is_space(text[j])) continue;
    std::size_t k = j;
    while (k < n && is_space(text[k])) ++k;
    if (k >= n || !opens_sentence(text, k)) continue;
    if (text[i] == '.' && j == i + 1 && config.abbreviations.contains(word_before(text, i + 1))) {
      continue;
    }
    spans.push_back({start, j});
    start = k;
    i = k - 1;
  }
  spans.push_back({start, n});

  std::vector<Span> trimmed;
  for (const Span& s : spans) {
    std::string_view piece = trim(text.substr(s.begin, s.end - s.begin));
    if (piece.empty()) continue;
    const auto b = static_cast<std::size_t>(piece.data() - text.data());
    trimmed.push_back({b, b + piece.size()});
  }

  const std::size_t min_chars = std::max<std::size_t>(1, config.min_sentence_chars);
  std::vector<Span> merged;
  bool carry = false;
  for (const Span& s : trimmed) {
    if (carry) {
      merged.back().end = s.end;
    } else {
      merged.push_back(s);
    }
    carry = merged.back().end - merged.back().begin < min_chars;
  }
  if (carry && merged.size() > 1) {
    merged[merged.size() - 2].end = merged.back().end;
    merged.pop_back();
  }

  std::vector<std::string> out;
  out.reserve(merged.size());
  for (const Span& s : merged) out.emplace_back(text.substr(s.begin, s.end - s.begin));
  return out;
}

std::vector<Sentence> segment(std::string_view text, const SegmenterConfig& config,
                              const TokenCounter& counter) {
  std::vector<Sentence> sentences;
  for (std::string& piece : split_sentences(text, config)) {
    Sentence s;
    s.index = sentences.size();
    s.token_count = counter.count(piece);
    s.text = std::move(piece);
    sentences.push_back(std::move(s));
  }
  return sentences;
}

std::string join_sentences(const std::vector<Sentence>& sentences) {
  std::string out;
  for (const Sentence& s : sentences) {
    if (!out.empty()) out += ' ';
    out += s.text;
  }
  return out;
}

}  // namespace longeval
