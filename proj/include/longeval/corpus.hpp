#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "longeval/criterion.hpp"
#include "longeval/textproc.hpp"

namespace longeval {

struct Document {
  std::string id;
  std::string text;
  std::vector<Sentence> sentences;  // empty until prepare()
};

struct GeneratedSummary {
  std::string system_id;
  std::string text;
  std::vector<Sentence> sentences;
};

struct ReferenceSummary {
  std::string text;
};

struct AnnotatedInstance {
  std::string id;
  Document document;
  GeneratedSummary summary;
  std::optional<ReferenceSummary> reference;
  std::map<CriterionKind, double> human_scores;
  bool is_human_written = false;
};

enum class CorpusFormat { kJsonl };

// One JSON object per line:
//   {"id", "document", "summary", "system_id", "reference"?, "scores": {...},
//    "is_human_written"?, "doc_id"?}
// Blank lines are skipped. Errors carry the 1-based line number.
std::vector<AnnotatedInstance> load_corpus(const std::filesystem::path& path,
                                           CorpusFormat format = CorpusFormat::kJsonl);
std::vector<AnnotatedInstance> parse_corpus(std::istream& in);

void write_corpus(std::ostream& out, const std::vector<AnnotatedInstance>& instances);
void write_corpus(const std::filesystem::path& path,
                  const std::vector<AnnotatedInstance>& instances);

// Segments document and summary and fills per-sentence token counts.
void prepare(AnnotatedInstance& instance, const SegmenterConfig& segmenter,
             const TokenCounter& counter);
void prepare(std::vector<AnnotatedInstance>& instances, const SegmenterConfig& segmenter,
             const TokenCounter& counter);

// Out-of-vocabulary token substituted into summaries by the synthetic corpus.
inline constexpr std::string_view kCorruptionMarker = "<oov>";

// Largest fraction of summary tokens replaced at the highest corruption level.
inline constexpr double kMaxCorruptionFraction = 0.5;

// Fraction of whitespace tokens in `text` that contain the corruption marker.
double corruption_fraction(std::string_view text);

// Score assigned to a summary with the given corruption fraction: the top of
// the scale at 0, the bottom at kMaxCorruptionFraction, rounded to an integer.
int proxy_score(double corruption, Scale scale);

// Deterministic corpus of `n_docs` documents, each paired with one summary per
// corruption level. Level 0 is clean; proxy scores strictly decrease with level.
// Requires n_docs >= 1 and 2 <= corruption_levels <= 5.
std::vector<AnnotatedInstance> generate_synthetic_corpus(std::uint64_t seed, std::size_t n_docs,
                                                         std::size_t corruption_levels);

}  // namespace longeval
