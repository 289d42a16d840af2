#include "longeval/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numeric>
#include <random>
#include <sstream>

#include "longeval/errors.hpp"

namespace longeval {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

const json& require_string(const json& record, const char* field, std::size_t line) {
  auto it = record.find(field);
  if (it == record.end()) throw CorpusError(std::string("missing field \"") + field + "\"", line);
  if (!it->is_string()) throw CorpusError(std::string("field \"") + field + "\" must be a string", line);
  return *it;
}

AnnotatedInstance parse_record(const json& record, std::size_t line) {
  if (!record.is_object()) throw CorpusError("record is not a JSON object", line);
  AnnotatedInstance inst;
  inst.id = require_string(record, "id", line).get<std::string>();
  inst.document.text = require_string(record, "document", line).get<std::string>();
  inst.summary.text = require_string(record, "summary", line).get<std::string>();
  inst.document.id = record.contains("doc_id") ? require_string(record, "doc_id", line).get<std::string>()
                                               : inst.id;
  if (record.contains("system_id")) {
    inst.summary.system_id = require_string(record, "system_id", line).get<std::string>();
  }
  if (record.contains("reference") && !record["reference"].is_null()) {
    std::string ref = require_string(record, "reference", line).get<std::string>();
    if (ref.empty()) throw CorpusError("field \"reference\" is empty", line);
    inst.reference = ReferenceSummary{std::move(ref)};
  }
  if (record.contains("is_human_written")) {
    if (!record["is_human_written"].is_boolean()) {
      throw CorpusError("field \"is_human_written\" must be a boolean", line);
    }
    inst.is_human_written = record["is_human_written"].get<bool>();
  }

  auto scores = record.find("scores");
  if (scores == record.end()) throw CorpusError("missing field \"scores\"", line);
  if (!scores->is_object() || scores->empty()) {
    throw CorpusError("field \"scores\" must be a non-empty object", line);
  }
  for (const auto& [name, value] : scores->items()) {
    auto kind = parse_criterion(name);
    if (!kind) throw CorpusError("unknown criterion \"" + name + "\"", line);
    if (!value.is_number()) throw CorpusError("score for \"" + name + "\" is not a number", line);
    const double score = value.get<double>();
    const Scale scale = scale_of(*kind);
    if (!std::isfinite(score) || !scale.contains(score)) {
      std::ostringstream msg;
      msg << name << " score " << score << " outside scale " << scale.min << "-" << scale.max;
      throw CorpusError(msg.str(), line);
    }
    inst.human_scores[*kind] = score;
  }
  return inst;
}

std::uint64_t draw(std::mt19937_64& rng, std::uint64_t n) { return rng() % n; }

std::vector<std::string> make_vocabulary(std::mt19937_64& rng, std::size_t size) {
  static constexpr std::string_view kOnsets[] = {"b", "c", "d", "f", "g", "l", "m", "n", "p",
                                                 "r", "s", "t", "v", "br", "tr", "st", "pl", "gr"};
  static constexpr std::string_view kVowels[] = {"a", "e", "i", "o", "u", "ai", "ea", "ou"};
  static constexpr std::string_view kCodas[] = {"", "n", "r", "s", "l", "x", "nd", "m"};
  const SegmenterConfig seg = SegmenterConfig::defaults();
  std::vector<std::string> words;
  while (words.size() < size) {
    std::string w;
    const std::uint64_t syllables = 2 + draw(rng, 2);
    for (std::uint64_t s = 0; s < syllables; ++s) {
      w += kOnsets[draw(rng, std::size(kOnsets))];
      w += kVowels[draw(rng, std::size(kVowels))];
    }
    w += kCodas[draw(rng, std::size(kCodas))];
    if (seg.abbreviations.contains(w + ".")) continue;
    if (std::find(words.begin(), words.end(), w) != words.end()) continue;
    words.push_back(std::move(w));
  }
  return words;
}

std::string capitalize(std::string w) {
  if (!w.empty() && w[0] >= 'a' && w[0] <= 'z') w[0] = static_cast<char>(w[0] - 'a' + 'A');
  return w;
}

constexpr std::size_t kSummarySentences = 4;
constexpr std::size_t kSummarySentenceWords = 10;

}  // namespace

std::vector<AnnotatedInstance> parse_corpus(std::istream& in) {
  std::vector<AnnotatedInstance> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) {
      continue;
    }
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw CorpusError(std::string("invalid JSON: ") + e.what(), line_no);
    }
    out.push_back(parse_record(record, line_no));
  }
  return out;
}

std::vector<AnnotatedInstance> load_corpus(const std::filesystem::path& path, CorpusFormat format) {
  if (format != CorpusFormat::kJsonl) throw CorpusError("unsupported corpus format");
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open corpus file " + path.string());
  return parse_corpus(in);
}

void write_corpus(std::ostream& out, const std::vector<AnnotatedInstance>& instances) {
  for (const AnnotatedInstance& inst : instances) {
    ordered_json record;
    record["id"] = inst.id;
    if (inst.document.id != inst.id) record["doc_id"] = inst.document.id;
    record["document"] = inst.document.text;
    record["summary"] = inst.summary.text;
    record["system_id"] = inst.summary.system_id;
    if (inst.reference) record["reference"] = inst.reference->text;
    ordered_json scores = ordered_json::object();
    for (const auto& [kind, score] : inst.human_scores) scores[std::string(to_string(kind))] = score;
    record["scores"] = std::move(scores);
    if (inst.is_human_written) record["is_human_written"] = true;
    out << record.dump() << '\n';
  }
}

void write_corpus(const std::filesystem::path& path,
                  const std::vector<AnnotatedInstance>& instances) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CorpusError("cannot write corpus file " + path.string());
  write_corpus(out, instances);
}

void prepare(AnnotatedInstance& instance, const SegmenterConfig& segmenter,
             const TokenCounter& counter) {
  instance.document.sentences = segment(instance.document.text, segmenter, counter);
  instance.summary.sentences = segment(instance.summary.text, segmenter, counter);
}

void prepare(std::vector<AnnotatedInstance>& instances, const SegmenterConfig& segmenter,
             const TokenCounter& counter) {
  for (AnnotatedInstance& inst : instances) prepare(inst, segmenter, counter);
}

double corruption_fraction(std::string_view text) {
  std::istringstream words{std::string(text)};
  std::size_t total = 0;
  std::size_t marked = 0;
  for (std::string w; words >> w;) {
    ++total;
    if (w.find(kCorruptionMarker) != std::string::npos) ++marked;
  }
  return total == 0 ? 0.0 : static_cast<double>(marked) / static_cast<double>(total);
}

int proxy_score(double corruption, Scale scale) {
  const double ratio = std::clamp(corruption / kMaxCorruptionFraction, 0.0, 1.0);
  const double value = scale.max - ratio * (scale.max - scale.min);
  return std::clamp(static_cast<int>(std::lround(value)), scale.min, scale.max);
}

std::vector<AnnotatedInstance> generate_synthetic_corpus(std::uint64_t seed, std::size_t n_docs,
                                                         std::size_t corruption_levels) {
  if (n_docs < 1) throw std::invalid_argument("n_docs must be at least 1");
  if (corruption_levels < 2 || corruption_levels > 5) {
    throw std::invalid_argument("corruption_levels must be in [2, 5]");
  }
  std::mt19937_64 rng(seed);
  const std::vector<std::string> vocab = make_vocabulary(rng, 600);

  std::vector<AnnotatedInstance> out;
  out.reserve(n_docs * corruption_levels);
  for (std::size_t d = 0; d < n_docs; ++d) {
    const std::size_t n_sentences = 20 + draw(rng, 41);
    std::vector<std::vector<std::string>> sentences(n_sentences);
    for (auto& words : sentences) {
      const std::size_t len = kSummarySentenceWords + draw(rng, 13);
      for (std::size_t w = 0; w < len; ++w) words.push_back(vocab[draw(rng, vocab.size())]);
    }
    std::string doc_text;
    for (const auto& words : sentences) {
      if (!doc_text.empty()) doc_text += ' ';
      for (std::size_t w = 0; w < words.size(); ++w) {
        if (w > 0) doc_text += ' ';
        doc_text += w == 0 ? capitalize(words[w]) : words[w];
      }
      doc_text += '.';
    }

    // The summary copies the opening words of a few distinct source sentences.
    std::vector<std::size_t> picks(n_sentences);
    std::iota(picks.begin(), picks.end(), 0);
    for (std::size_t i = 0; i < kSummarySentences; ++i) {
      std::swap(picks[i], picks[i + draw(rng, n_sentences - i)]);
    }
    picks.resize(kSummarySentences);
    std::sort(picks.begin(), picks.end());
    std::vector<std::string> summary_words;
    for (std::size_t s : picks) {
      for (std::size_t w = 0; w < kSummarySentenceWords; ++w) summary_words.push_back(sentences[s][w]);
    }

    // Corruptible positions exclude sentence-initial words so that the
    // summary keeps its sentence boundaries.
    std::vector<std::size_t> positions;
    for (std::size_t p = 0; p < summary_words.size(); ++p) {
      if (p % kSummarySentenceWords != 0) positions.push_back(p);
    }
    for (std::size_t i = positions.size(); i > 1; --i) {
      std::swap(positions[i - 1], positions[draw(rng, i)]);
    }

    auto render = [&](const std::vector<bool>& corrupt) {
      std::string text;
      for (std::size_t p = 0; p < summary_words.size(); ++p) {
        if (p > 0) text += ' ';
        const bool first = p % kSummarySentenceWords == 0;
        const std::string word = corrupt[p] ? std::string(kCorruptionMarker) : summary_words[p];
        text += first ? capitalize(word) : word;
        if (p % kSummarySentenceWords == kSummarySentenceWords - 1) text += '.';
      }
      return text;
    };

    const std::string doc_id = "doc" + std::to_string(d);
    const std::string clean = render(std::vector<bool>(summary_words.size(), false));
    std::map<CriterionKind, double> previous;
    for (std::size_t level = 0; level < corruption_levels; ++level) {
      const double target = kMaxCorruptionFraction * static_cast<double>(level) /
                            static_cast<double>(corruption_levels - 1);
      const auto k = static_cast<std::size_t>(
          std::lround(target * static_cast<double>(summary_words.size())));
      std::vector<bool> corrupt(summary_words.size(), false);
      for (std::size_t i = 0; i < k; ++i) corrupt[positions[i]] = true;

      AnnotatedInstance inst;
      inst.id = doc_id + "-L" + std::to_string(level);
      inst.document.id = doc_id;
      inst.document.text = doc_text;
      inst.summary.system_id = "corrupt-" + std::to_string(level);
      inst.summary.text = render(corrupt);
      inst.reference = ReferenceSummary{clean};
      const double fraction = corruption_fraction(inst.summary.text);
      for (CriterionKind kind : kAllCriteria) {
        const double score = proxy_score(fraction, scale_of(kind));
        if (level > 0 && !(score < previous[kind])) {
          throw std::logic_error("synthetic proxy scores are not strictly decreasing");
        }
        previous[kind] = score;
        inst.human_scores[kind] = score;
      }
      out.push_back(std::move(inst));
    }
  }
  return out;
}

}  // namespace longeval
