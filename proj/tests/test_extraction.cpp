#include <atomic>
#include <catch_amalgamated.hpp>
#include <numeric>

#include "longeval/errors.hpp"
#include "longeval/extraction.hpp"
#include "test_util.hpp"

using namespace longeval;
using longeval::testing::doc_with_counts;
using longeval::testing::make_doc;
using longeval::testing::make_summary;
using Indices = std::vector<std::size_t>;

namespace {

const WhitespaceCounter kWs;

// Counts calls and otherwise behaves like the mock.
class CountingProvider final : public SemanticProvider {
 public:
  std::size_t nli_calls() const { return nli_calls_; }

 private:
  double do_bertscore_recall(std::string_view c, std::string_view r) const override {
    return mock_.bertscore_recall(c, r);
  }
  NliProbs do_nli(std::string_view p, std::string_view h) const override {
    ++nli_calls_;
    return mock_.nli(p, h);
  }

  MockSemanticProvider mock_;
  mutable std::atomic<std::size_t> nli_calls_{0};
};

class BrokenProvider final : public SemanticProvider {
 private:
  double do_bertscore_recall(std::string_view c, std::string_view) const override {
    if (c.find("bad") != std::string_view::npos) {
      throw ProviderError(ProviderError::Kind::kTransport, "connection reset");
    }
    return 0.5;
  }
  NliProbs do_nli(std::string_view, std::string_view) const override { return {2.0, 0.0, 0.0}; }
};

// Independent trace of greedy first-fit: repeatedly take the best unvisited
// sentence (lowest index on ties) and keep it if it fits.
Indices greedy_oracle(const std::vector<double>& scores, const std::vector<std::size_t>& tokens,
                      std::size_t budget) {
  std::vector<bool> visited(scores.size(), false);
  Indices kept;
  std::size_t used = 0;
  for (std::size_t step = 0; step < scores.size(); ++step) {
    std::size_t best = scores.size();
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (!visited[i] && (best == scores.size() || scores[i] > scores[best])) best = i;
    }
    visited[best] = true;
    if (used + tokens[best] <= budget) {
      used += tokens[best];
      kept.push_back(best);
    }
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

}  // namespace

TEST_CASE("budget rejects zero") {
  CHECK_THROWS_AS(Budget(0), std::invalid_argument);
  CHECK(Budget(5).max_tokens() == 5);
  CHECK(Budget(4) < Budget(5));
}

TEST_CASE("method names round-trip") {
  for (MethodKind k : kAllMethods) {
    const ExtractionMethod m{k, LeadMode::kSentenceBoundary, {}};
    CHECK(ExtractionMethod::parse(m.name()) == m);
  }
  const ExtractionMethod exact{MethodKind::kLead, LeadMode::kTokenExact, {}};
  CHECK(exact.name() == "lead-exact");
  CHECK(ExtractionMethod::parse("lead-exact") == exact);
  CHECK_FALSE(ExtractionMethod::parse("textrank"));
}

TEST_CASE("lead takes the longest fitting sentence prefix") {
  const Document d = doc_with_counts({50, 60, 40}, kWs);
  const auto e = extract_lead(d, Budget(128), LeadMode::kSentenceBoundary, kWs);
  CHECK(e.sentence_indices == Indices{0, 1});
  CHECK(e.token_count == 110);
  CHECK(e.text == d.sentences[0].text + " " + d.sentences[1].text);

  const auto all = extract_lead(d, Budget(150), LeadMode::kSentenceBoundary, kWs);
  CHECK(all.sentence_indices == Indices{0, 1, 2});
  CHECK(all.text == d.text);
}

TEST_CASE("lead stops at the first sentence that does not fit") {
  const Document d = doc_with_counts({50, 100, 10}, kWs);
  CHECK(extract_lead(d, Budget(128), LeadMode::kSentenceBoundary, kWs).sentence_indices ==
        Indices{0});
}

TEST_CASE("lead truncates an oversized first sentence") {
  const Document d = doc_with_counts({300, 10}, kWs);
  const auto e = extract_lead(d, Budget(128), LeadMode::kSentenceBoundary, kWs);
  CHECK(e.sentence_indices == Indices{0});
  CHECK(e.token_count == 128);
  CHECK(d.sentences[0].text.starts_with(e.text));
}

TEST_CASE("token-exact lead cuts mid-sentence") {
  const Document d = doc_with_counts({50, 60, 40}, kWs);
  const auto e = extract_lead(d, Budget(70), LeadMode::kTokenExact, kWs);
  CHECK(e.token_count == 70);
  CHECK(e.sentence_indices == Indices{0, 1});
  CHECK(d.text.starts_with(e.text));
  CHECK(extract_lead(d, Budget(50), LeadMode::kTokenExact, kWs).sentence_indices == Indices{0});
}

TEST_CASE("empty document gives an empty extraction") {
  const Document d = make_doc({}, kWs);
  CHECK(extract_lead(d, Budget(10), LeadMode::kSentenceBoundary, kWs).sentence_indices.empty());
  CHECK(pack_by_score(d, {}, Budget(10), kWs).token_count == 0);
}

TEST_CASE("greedy packing skips and continues") {
  const Document d = doc_with_counts({60, 60, 60}, kWs);
  const std::vector<double> scores{0.9, 0.1, 0.8};
  const auto e = pack_by_score(d, scores, Budget(128), kWs);
  CHECK(e.sentence_indices == Indices{0, 2});
  CHECK(e.token_count == 120);
  CHECK(e.sentence_scores.size() == 3);

  CHECK(pack_by_score(d, scores, Budget(500), kWs).sentence_indices == Indices{0, 1, 2});
  // Nothing fits: empty but valid.
  CHECK(pack_by_score(d, scores, Budget(10), kWs).sentence_indices.empty());
}

TEST_CASE("minimum score filters candidates") {
  const Document d = doc_with_counts({10, 10, 10}, kWs);
  const auto e = pack_by_score(d, std::vector<double>{0.9, 0.1, 0.8}, Budget(100), kWs, 0.5);
  CHECK(e.sentence_indices == Indices{0, 2});
}

TEST_CASE("uniform scores with equal sentence lengths select the lead prefix") {
  const Document d = doc_with_counts({20, 20, 20, 20, 20}, kWs);
  const std::vector<double> flat(5, 1.0);
  for (std::size_t n : {20, 45, 60, 99, 100, 500}) {
    CHECK(pack_by_score(d, flat, Budget(n), kWs).sentence_indices ==
          extract_lead(d, Budget(n), LeadMode::kSentenceBoundary, kWs).sentence_indices);
  }
  // Below one sentence LEAD truncates sentence 0 while packing skips it.
  CHECK(pack_by_score(d, flat, Budget(19), kWs).sentence_indices.empty());
  CHECK(extract_lead(d, Budget(19), LeadMode::kSentenceBoundary, kWs).sentence_indices ==
        Indices{0});
}

TEST_CASE("uniform-score packing extends the lead prefix") {
  // First-fit keeps a later short sentence that LEAD's prefix rule cannot.
  const Document d = doc_with_counts({50, 100, 10}, kWs);
  const std::vector<double> flat(3, 0.0);
  CHECK(pack_by_score(d, flat, Budget(128), kWs).sentence_indices == Indices{0, 2});
}

TEST_CASE("rouge scoring") {
  const Document d = make_doc({"the cat sat on the mat", "dogs bark loudly", "a cat sat"}, kWs);
  const GeneratedSummary s = make_summary({"the cat sat on the mat"}, kWs);
  const auto r1 = score_sentences(d, s, {MethodKind::kRouge1, {}, {}}, nullptr);
  CHECK(r1[0] == 1.0);
  CHECK(r1[1] == 0.0);
  const auto r12 = score_sentences(d, s, {MethodKind::kRouge12, {}, {}}, nullptr);
  CHECK(r12[0] == 2.0);
  CHECK(r12[1] == 0.0);
  const auto r2 = score_sentences(d, s, {MethodKind::kRouge2, {}, {}}, nullptr);
  CHECK(r2[2] == Catch::Approx(1.0 / 5.0));
}

TEST_CASE("nli score is the max over summary premises") {
  const Document d = make_doc({"a b c", "d e", "a d"}, kWs);
  const GeneratedSummary s = make_summary({"a b", "d f"}, kWs);
  CountingProvider provider;
  const auto scores = score_sentences(d, s, {MethodKind::kNli, {}, {}}, &provider);
  // Jaccard per (premise, sentence): s0 {2/3, 0}, s1 {0, 1/3}, s2 {1/3, 1/3}.
  CHECK(scores[0] == Catch::Approx(2.0 / 3.0));
  CHECK(scores[1] == Catch::Approx(1.0 / 3.0));
  CHECK(scores[2] == Catch::Approx(1.0 / 3.0));
  CHECK(provider.nli_calls() == 6);
}

TEST_CASE("provider methods need a provider") {
  const Document d = make_doc({"x"}, kWs);
  const GeneratedSummary s = make_summary({"x"}, kWs);
  CHECK_THROWS_AS(score_sentences(d, s, {MethodKind::kBertScore, {}, {}}, nullptr),
                  std::invalid_argument);
}

TEST_CASE("provider failures carry the sentence index") {
  const Document d = make_doc({"fine", "also fine", "bad one", "bad two"}, kWs);
  const GeneratedSummary s = make_summary({"x"}, kWs);
  BrokenProvider broken;
  try {
    score_sentences(d, s, {MethodKind::kBertScore, {}, {}}, &broken);
    FAIL("expected ScoringError");
  } catch (const ScoringError& e) {
    CHECK(e.sentence_index() == 2);
  }
  CHECK_THROWS_AS(score_sentences(d, s, {MethodKind::kNli, {}, {}}, &broken), ScoringError);
}

TEST_CASE("rouge1 selects a sentence that copies the summary") {
  std::mt19937_64 rng(4);
  std::vector<std::string> texts;
  for (int i = 0; i < 10; ++i) texts.push_back(longeval::testing::words(rng, 15));
  texts[5] = "the committee approved the new harbor budget today";
  const Document d = make_doc(texts, kWs);
  const GeneratedSummary s = make_summary({texts[5]}, kWs);
  const auto e = extract(d, s, {MethodKind::kRouge1, {}, {}}, Budget(20), kWs);
  CHECK(std::find(e.sentence_indices.begin(), e.sentence_indices.end(), 5) !=
        e.sentence_indices.end());
}

TEST_CASE("extract dispatches and is deterministic") {
  const Document d = doc_with_counts({30, 40, 20, 50, 10}, kWs, 9);
  const GeneratedSummary s = make_summary({d.sentences[3].text}, kWs);
  const ExtractionMethod lead{MethodKind::kLead, {}, {}};
  CHECK(extract(d, s, lead, Budget(100), kWs).sentence_indices ==
        extract_lead(d, Budget(100), LeadMode::kSentenceBoundary, kWs).sentence_indices);
  MockSemanticProvider mock;
  for (MethodKind k : kAllMethods) {
    const ExtractionMethod m{k, {}, {}};
    const auto a = extract(d, s, m, Budget(64), kWs, &mock);
    const auto b = extract(d, s, m, Budget(64), kWs, &mock);
    CHECK(a.sentence_indices == b.sentence_indices);
    CHECK(a.text == b.text);
    CHECK(a.method == m);
  }
}

TEST_CASE("packing matches an independent greedy trace") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng() % 25;
    std::vector<std::size_t> tokens(n);
    std::vector<double> scores(n);
    for (std::size_t i = 0; i < n; ++i) {
      tokens[i] = 1 + rng() % 80;
      // Coarse scores force plenty of ties.
      scores[i] = static_cast<double>(rng() % 5);
    }
    const Document d = doc_with_counts(tokens, kWs, trial);
    const std::size_t budget = 1 + rng() % 400;
    const auto e = pack_by_score(d, scores, Budget(budget), kWs);
    REQUIRE(e.sentence_indices == greedy_oracle(scores, tokens, budget));
    CHECK(e.token_count <= budget);
    CHECK(std::adjacent_find(e.sentence_indices.begin(), e.sentence_indices.end(),
                             std::greater_equal<>()) == e.sentence_indices.end());
  }
}
