#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <memory>
#include <semaphore>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace longeval {

struct NliProbs {
  double entail = 0.0;
  double contradict = 0.0;
  double neutral = 0.0;

  bool operator==(const NliProbs&) const = default;
};

// For batch calls: (candidate, reference) for recall, (premise, hypothesis)
// for NLI.
struct TextPair {
  std::string first;
  std::string second;
};

inline constexpr double kSimplexTolerance = 1e-6;

// Throw ProviderError(kValidation) on out-of-range or non-simplex values.
void validate_recall(double recall);
void validate_nli(const NliProbs& probs);

// Model-backed sentence scorer. Every value returned through the public
// interface has been validated, whatever the implementation.
class SemanticProvider {
 public:
  virtual ~SemanticProvider() = default;

  double bertscore_recall(std::string_view candidate, std::string_view reference) const;
  NliProbs nli(std::string_view premise, std::string_view hypothesis) const;

  // Results are in request order.
  std::vector<double> bertscore_recall_batch(std::span<const TextPair> pairs) const;
  std::vector<NliProbs> nli_batch(std::span<const TextPair> pairs) const;

  // Upper bound on concurrent calls callers should issue.
  virtual std::size_t max_parallel() const { return 1; }

 private:
  virtual double do_bertscore_recall(std::string_view candidate, std::string_view reference) const = 0;
  virtual NliProbs do_nli(std::string_view premise, std::string_view hypothesis) const = 0;
  virtual std::vector<double> do_bertscore_recall_batch(std::span<const TextPair> pairs) const;
  virtual std::vector<NliProbs> do_nli_batch(std::span<const TextPair> pairs) const;
};

// Deterministic in-process stand-in. Recall is ROUGE-1 recall of the
// reference by the candidate; NLI entailment is the unigram Jaccard index of
// premise and hypothesis, with zero contradiction.
class MockSemanticProvider final : public SemanticProvider {
 public:
  explicit MockSemanticProvider(std::size_t max_parallel = 1) : max_parallel_(max_parallel) {}

  std::size_t max_parallel() const override { return max_parallel_; }

 private:
  double do_bertscore_recall(std::string_view candidate, std::string_view reference) const override;
  NliProbs do_nli(std::string_view premise, std::string_view hypothesis) const override;

  std::size_t max_parallel_;
};

struct HttpProviderConfig {
  std::string endpoint;  // e.g. http://127.0.0.1:8080
  std::chrono::milliseconds timeout{30000};
  std::size_t max_parallel = 4;
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{200};
  bool idf = false;
};

// Client for the JSON-over-HTTP scoring contract:
//   POST /v1/bertscore_recall {candidate, reference, idf} -> {recall}
//   POST /v1/nli {premise, hypothesis} -> {entail, contradict, neutral}
// Batch calls send arrays in the same fields and expect arrays back.
class HttpSemanticProvider final : public SemanticProvider {
 public:
  explicit HttpSemanticProvider(HttpProviderConfig config);

  std::size_t max_parallel() const override { return config_.max_parallel; }
  std::size_t requests_sent() const;

 private:
  double do_bertscore_recall(std::string_view candidate, std::string_view reference) const override;
  NliProbs do_nli(std::string_view premise, std::string_view hypothesis) const override;
  std::vector<double> do_bertscore_recall_batch(std::span<const TextPair> pairs) const override;
  std::vector<NliProbs> do_nli_batch(std::span<const TextPair> pairs) const override;

  std::string post(const std::string& path, const std::string& body) const;

  HttpProviderConfig config_;
  mutable std::counting_semaphore<> in_flight_;
  mutable std::atomic<std::size_t> requests_{0};
};

struct ProviderSettings {
  std::string endpoint = "mock";
  std::chrono::milliseconds timeout{30000};
  std::size_t max_parallel = 4;
  bool idf = false;
};

// `endpoint == "mock"` selects MockSemanticProvider.
std::unique_ptr<SemanticProvider> make_provider(const ProviderSettings& settings);

}  // namespace longeval
