#include "longeval/rouge.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <stdexcept>

namespace longeval::rouge {
namespace {

bool is_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }

void check_order(int order) {
  if (order != 1 && order != 2) throw std::invalid_argument("n-gram order must be 1 or 2");
}

}  // namespace

std::string normalize_token(std::string_view token) {
  std::size_t b = 0;
  std::size_t e = token.size();
  while (b < e && is_punct(token[b])) ++b;
  while (e > b && is_punct(token[e - 1])) --e;
  std::string out(token.substr(b, e - b));
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  for (std::string w; in >> w;) {
    std::string t = normalize_token(w);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

std::size_t NgramMultiset::total() const {
  std::size_t n = 0;
  for (const auto& [gram, c] : counts) n += c;
  return n;
}

NgramMultiset ngrams(std::span<const std::string> tokens, int order) {
  check_order(order);
  std::vector<std::string> norm;
  norm.reserve(tokens.size());
  for (const std::string& t : tokens) {
    std::string n = normalize_token(t);
    if (!n.empty()) norm.push_back(std::move(n));
  }
  NgramMultiset out;
  out.order = order;
  const auto k = static_cast<std::size_t>(order);
  for (std::size_t i = 0; i + k <= norm.size(); ++i) {
    std::string key = norm[i];
    if (k == 2) {
      key += '\x1f';
      key += norm[i + 1];
    }
    ++out.counts[key];
  }
  return out;
}

std::size_t clipped_overlap(const NgramMultiset& candidate, const NgramMultiset& reference) {
  const NgramMultiset& small = candidate.counts.size() < reference.counts.size() ? candidate : reference;
  const NgramMultiset& large = &small == &candidate ? reference : candidate;
  std::size_t overlap = 0;
  for (const auto& [gram, c] : small.counts) {
    auto it = large.counts.find(gram);
    if (it != large.counts.end()) overlap += std::min(c, it->second);
  }
  return overlap;
}

RougeScore score(const NgramMultiset& candidate, const NgramMultiset& reference) {
  const auto overlap = static_cast<double>(clipped_overlap(candidate, reference));
  const std::size_t ref_total = reference.total();
  const std::size_t cand_total = candidate.total();
  RougeScore s;
  s.recall = ref_total == 0 ? 0.0 : overlap / static_cast<double>(ref_total);
  s.precision = cand_total == 0 ? 0.0 : overlap / static_cast<double>(cand_total);
  s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

double recall(const NgramMultiset& candidate, const NgramMultiset& reference) {
  return score(candidate, reference).recall;
}

double recall(std::span<const std::string> candidate, std::span<const std::string> reference,
              int order) {
  return recall(ngrams(candidate, order), ngrams(reference, order));
}

double combined(std::span<const std::string> candidate, std::span<const std::string> reference) {
  return recall(candidate, reference, 1) + recall(candidate, reference, 2);
}

RougeScore f1(std::span<const std::string> candidate, std::span<const std::string> reference,
              int order) {
  return score(ngrams(candidate, order), ngrams(reference, order));
}

RougeScore f1(std::string_view candidate, std::string_view reference, int order) {
  const auto c = tokenize(candidate);
  const auto r = tokenize(reference);
  return f1(c, r, order);
}

}  // namespace longeval::rouge
