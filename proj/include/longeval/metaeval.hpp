#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "longeval/corpus.hpp"
#include "longeval/criterion.hpp"
#include "longeval/extraction.hpp"
#include "longeval/judge.hpp"
#include "longeval/semantic.hpp"
#include "longeval/stats.hpp"

namespace longeval {

struct EvaluationOptions {
  // Human-written reference rows are left out of correlations unless set.
  bool include_human_written = false;
  std::size_t parallel = 1;
};

struct InstanceResult {
  std::string instance_id;
  JudgeVerdict verdict;
  std::size_t extracted_tokens = 0;
  double human_score = 0.0;
};

struct InstanceFailure {
  std::string instance_id;
  std::string message;
};

struct CorpusEvaluation {
  std::vector<InstanceResult> results;  // corpus order
  std::vector<InstanceFailure> failures;
};

// Whether `instance` takes part in evaluating `criterion`.
bool is_eligible(const AnnotatedInstance& instance, CriterionKind criterion,
                 const EvaluationOptions& options);

// Extracts (or, with no method, passes the full document) and judges every
// eligible instance. Instances must have been prepare()d. Per-instance
// failures are collected; throws only when every eligible instance fails.
CorpusEvaluation evaluate_corpus(std::span<const AnnotatedInstance> instances,
                                 const std::optional<ExtractionMethod>& method,
                                 std::optional<Budget> budget, CriterionKind criterion, Judge& judge,
                                 const SemanticProvider* provider, const EvaluationOptions& options);

struct HistogramBin {
  std::size_t bin = 0;
  std::size_t count = 0;

  bool operator==(const HistogramBin&) const = default;
};

// Histogram of index / sentence_count over every selected sentence, with
// `bins` equal-width bins over [0, 1). All bins are emitted.
std::vector<HistogramBin> position_distribution(std::span<const ExtractedDocument> extractions,
                                                std::span<const Document> docs,
                                                std::size_t bins = 20);

// Mean and nearest-rank quartiles of extracted token counts.
LengthStats length_distribution(std::span<const ExtractedDocument> extractions);

// Correlation of ROUGE-1 F1 (summary vs reference) with human scores.
CorrelationResult rouge_baseline(std::span<const AnnotatedInstance> instances,
                                 CriterionKind criterion, const EvaluationOptions& options = {});

enum class SelectionKey { kPearson, kSpearman };

struct CriterionCell {
  CriterionKind criterion = CriterionKind::kConsistency;
  std::optional<CorrelationResult> correlation;
  std::string correlation_error;  // set when correlation is undefined
  std::size_t n_judged = 0;
  std::size_t total_prompt_tokens = 0;
  double avg_prompt_tokens = 0.0;
  // price_per_1k_input * avg_prompt_tokens / 1000
  double avg_cost = 0.0;
  double total_cost = 0.0;
  std::vector<InstanceFailure> failures;
};

struct SweepCell {
  // Both empty for the full-document baseline.
  std::optional<ExtractionMethod> method;
  std::optional<Budget> budget;
  std::vector<CriterionCell> criteria;
  LengthStats lengths;
  std::vector<HistogramBin> positions;

  std::string method_name() const { return method ? method->name() : "full"; }
  const CriterionCell* find(CriterionKind criterion) const;
};

struct Selection {
  std::optional<std::size_t> best;    // index into SweepReport::cells
  std::optional<std::size_t> pareto;  // best among budgets <= the Pareto cap
};

struct SweepReport {
  std::vector<SweepCell> cells;
  std::optional<SweepCell> full_document_cell;
  std::map<CriterionKind, Selection> selections;
  SelectionKey select_by = SelectionKey::kPearson;
  std::size_t pareto_max_budget = 1024;
};

struct SweepOptions {
  std::vector<ExtractionMethod> methods;
  std::vector<Budget> budgets;
  std::vector<CriterionKind> criteria;
  bool include_full_document = true;
  SelectionKey select_by = SelectionKey::kPearson;
  std::size_t pareto_max_budget = 1024;
  std::size_t histogram_bins = 20;
  EvaluationOptions evaluation;
};

// Best is the argmax of the selection key over every cell with a defined
// correlation; Pareto is the argmax over cells whose budget is at most
// `pareto_max_budget`. Earlier cells win ties.
std::map<CriterionKind, Selection> select_best_and_pareto(std::span<const SweepCell> cells,
                                                          std::span<const CriterionKind> criteria,
                                                          SelectionKey key,
                                                          std::size_t pareto_max_budget);

// One cell per (method, budget) in the given order, plus the full-document
// baseline when requested.
SweepReport run_sweep(std::span<const AnnotatedInstance> instances, const SweepOptions& options,
                      Judge& judge, const SemanticProvider* provider);

}  // namespace longeval
