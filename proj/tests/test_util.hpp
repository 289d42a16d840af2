#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "longeval/corpus.hpp"
#include "longeval/textproc.hpp"

namespace longeval::testing {

// Document whose sentences are exactly `texts`, bypassing segmentation.
inline Document make_doc(const std::vector<std::string>& texts, const TokenCounter& counter,
                         std::string id = "doc") {
  Document d;
  d.id = std::move(id);
  for (std::size_t i = 0; i < texts.size(); ++i) {
    d.sentences.push_back({i, texts[i], counter.count(texts[i])});
    if (i > 0) d.text += ' ';
    d.text += texts[i];
  }
  return d;
}

inline GeneratedSummary make_summary(const std::vector<std::string>& texts,
                                     const TokenCounter& counter) {
  const Document d = make_doc(texts, counter);
  return {"sys", d.text, d.sentences};
}

// Sentence of `n` whitespace tokens drawn from a small vocabulary.
inline std::string words(std::mt19937_64& rng, std::size_t n) {
  static const char* kVocab[] = {"alpha", "beta", "gamma", "delta", "river", "stone",
                                 "cloud", "ember", "frost", "grove", "harbor", "iris"};
  std::string s;
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) s += ' ';
    s += kVocab[rng() % std::size(kVocab)];
  }
  return s;
}

// Document with `sentence_tokens[i]` whitespace tokens in sentence i.
inline Document doc_with_counts(const std::vector<std::size_t>& sentence_tokens,
                                const TokenCounter& counter, std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  std::vector<std::string> texts;
  for (std::size_t n : sentence_tokens) texts.push_back(words(rng, n));
  return make_doc(texts, counter);
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("longeval-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace longeval::testing
