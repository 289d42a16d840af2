#include "longeval/metaeval.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "longeval/errors.hpp"
#include "longeval/parallel.hpp"
#include "longeval/rouge.hpp"

namespace longeval {
namespace {

std::string describe(const std::exception_ptr& e) {
  try {
    std::rethrow_exception(e);
  } catch (const std::exception& ex) {
    return ex.what();
  } catch (...) {
    return "unknown error";
  }
}

void require_prepared(const AnnotatedInstance& instance) {
  if (instance.document.sentences.empty() && !instance.document.text.empty()) {
    throw std::invalid_argument("instance " + instance.id + " has not been prepared");
  }
}

// Full-document stand-in: every sentence, the whole text.
ExtractedDocument whole_document(const Document& doc, const TokenCounter& counter) {
  ExtractedDocument out;
  out.source_id = doc.id;
  out.text = doc.text;
  out.token_count = counter.count(doc.text);
  out.sentence_indices.resize(doc.sentences.size());
  for (std::size_t i = 0; i < doc.sentences.size(); ++i) out.sentence_indices[i] = i;
  return out;
}

// Extractions for instances[i], or the error that prevented one.
struct ExtractionBatch {
  std::vector<std::optional<ExtractedDocument>> docs;
  std::vector<std::string> errors;
};

ExtractionBatch extract_all(std::span<const AnnotatedInstance> instances,
                            const std::vector<bool>& wanted,
                            const std::optional<ExtractionMethod>& method,
                            std::optional<Budget> budget, const TokenCounter& counter,
                            const SemanticProvider* provider, std::size_t parallel) {
  if (method && !budget) throw std::invalid_argument("an extraction method needs a budget");
  ExtractionBatch batch;
  batch.docs.resize(instances.size());
  batch.errors.resize(instances.size());
  const auto errors = parallel_for(instances.size(), parallel, [&](std::size_t i) {
    if (!wanted[i]) return;
    const AnnotatedInstance& inst = instances[i];
    batch.docs[i] = method ? extract(inst.document, inst.summary, *method, *budget, counter, provider)
                           : whole_document(inst.document, counter);
  });
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (errors[i]) batch.errors[i] = "extraction failed: " + describe(errors[i]);
  }
  return batch;
}

CorpusEvaluation judge_all(std::span<const AnnotatedInstance> instances,
                           const ExtractionBatch& batch, CriterionKind criterion, Judge& judge,
                           const EvaluationOptions& options) {
  std::vector<std::size_t> targets;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (is_eligible(instances[i], criterion, options)) targets.push_back(i);
  }
  if (targets.empty()) {
    throw Error("no instances with a human " + std::string(to_string(criterion)) + " score");
  }

  std::vector<std::optional<JudgeVerdict>> verdicts(targets.size());
  const auto errors = parallel_for(targets.size(), options.parallel, [&](std::size_t t) {
    const std::size_t i = targets[t];
    if (!batch.docs[i]) throw Error(batch.errors[i]);
    verdicts[t] = judge.judge(*batch.docs[i], instances[i].summary, criterion);
  });

  CorpusEvaluation out;
  for (std::size_t t = 0; t < targets.size(); ++t) {
    const AnnotatedInstance& inst = instances[targets[t]];
    if (errors[t]) {
      out.failures.push_back({inst.id, describe(errors[t])});
      continue;
    }
    out.results.push_back({inst.id, *verdicts[t], batch.docs[targets[t]]->token_count,
                           inst.human_scores.at(criterion)});
  }
  if (out.results.empty()) {
    std::string msg = "all " + std::to_string(out.failures.size()) + " instances failed";
    for (const auto& f : out.failures) {
      msg += "\n  " + f.instance_id + ": " + f.message;
    }
    throw Error(msg);
  }
  return out;
}

CriterionCell summarize(CriterionKind criterion, const CorpusEvaluation& eval,
                        const JudgeConfig& config) {
  CriterionCell cell;
  cell.criterion = criterion;
  cell.failures = eval.failures;
  cell.n_judged = eval.results.size();
  std::vector<double> judged;
  std::vector<double> human;
  for (const auto& r : eval.results) {
    judged.push_back(r.verdict.value());
    human.push_back(r.human_score);
    cell.total_prompt_tokens += r.verdict.prompt_tokens;
    cell.total_cost += r.verdict.cost;
  }
  cell.avg_prompt_tokens =
      static_cast<double>(cell.total_prompt_tokens) / static_cast<double>(cell.n_judged);
  cell.avg_cost = config.price_per_1k_input * cell.avg_prompt_tokens / 1000.0;
  try {
    cell.correlation = correlate(judged, human);
  } catch (const StatsError& e) {
    cell.correlation_error = e.what();
  }
  return cell;
}

double key_of(const CorrelationResult& c, SelectionKey key) {
  return key == SelectionKey::kPearson ? c.pearson_r : c.spearman_rho;
}

}  // namespace

bool is_eligible(const AnnotatedInstance& instance, CriterionKind criterion,
                 const EvaluationOptions& options) {
  if (instance.is_human_written && !options.include_human_written) return false;
  return instance.human_scores.contains(criterion);
}

CorpusEvaluation evaluate_corpus(std::span<const AnnotatedInstance> instances,
                                 const std::optional<ExtractionMethod>& method,
                                 std::optional<Budget> budget, CriterionKind criterion, Judge& judge,
                                 const SemanticProvider* provider, const EvaluationOptions& options) {
  std::vector<bool> wanted(instances.size());
  for (std::size_t i = 0; i < instances.size(); ++i) {
    wanted[i] = is_eligible(instances[i], criterion, options);
    if (wanted[i]) require_prepared(instances[i]);
  }
  const ExtractionBatch batch = extract_all(instances, wanted, method, budget, judge.counter(),
                                            provider, options.parallel);
  return judge_all(instances, batch, criterion, judge, options);
}

std::vector<HistogramBin> position_distribution(std::span<const ExtractedDocument> extractions,
                                                std::span<const Document> docs, std::size_t bins) {
  if (bins == 0) throw std::invalid_argument("histogram needs at least one bin");
  std::unordered_map<std::string_view, const Document*> by_id;
  for (const Document& d : docs) by_id.emplace(d.id, &d);

  std::vector<HistogramBin> hist(bins);
  for (std::size_t b = 0; b < bins; ++b) hist[b].bin = b;
  for (const ExtractedDocument& e : extractions) {
    const auto it = by_id.find(e.source_id);
    if (it == by_id.end()) throw std::invalid_argument("unknown document " + e.source_id);
    const std::size_t n = it->second->sentences.size();
    for (std::size_t idx : e.sentence_indices) {
      if (idx >= n) throw std::out_of_range("sentence index past end of " + e.source_id);
      // floor(idx / n * bins) in integers, so equal fractions share a bin.
      hist[idx * bins / n].count += 1;
    }
  }
  return hist;
}

LengthStats length_distribution(std::span<const ExtractedDocument> extractions) {
  std::vector<double> lengths;
  lengths.reserve(extractions.size());
  for (const auto& e : extractions) lengths.push_back(static_cast<double>(e.token_count));
  return length_stats(lengths);
}

CorrelationResult rouge_baseline(std::span<const AnnotatedInstance> instances,
                                 CriterionKind criterion, const EvaluationOptions& options) {
  std::vector<double> f1s;
  std::vector<double> human;
  for (const AnnotatedInstance& inst : instances) {
    if (!is_eligible(inst, criterion, options)) continue;
    if (!inst.reference) throw Error("instance " + inst.id + " has no reference summary");
    f1s.push_back(rouge::f1(inst.summary.text, inst.reference->text, 1).f1);
    human.push_back(inst.human_scores.at(criterion));
  }
  return correlate(f1s, human);
}

const CriterionCell* SweepCell::find(CriterionKind criterion) const {
  for (const auto& c : criteria) {
    if (c.criterion == criterion) return &c;
  }
  return nullptr;
}

std::map<CriterionKind, Selection> select_best_and_pareto(std::span<const SweepCell> cells,
                                                          std::span<const CriterionKind> criteria,
                                                          SelectionKey key,
                                                          std::size_t pareto_max_budget) {
  std::map<CriterionKind, Selection> out;
  for (CriterionKind criterion : criteria) {
    Selection sel;
    double best = 0.0;
    double pareto = 0.0;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const CriterionCell* c = cells[i].find(criterion);
      if (c == nullptr || !c->correlation) continue;
      const double v = key_of(*c->correlation, key);
      if (!sel.best || v > best) {
        sel.best = i;
        best = v;
      }
      const bool within = cells[i].budget && cells[i].budget->max_tokens() <= pareto_max_budget;
      if (within && (!sel.pareto || v > pareto)) {
        sel.pareto = i;
        pareto = v;
      }
    }
    out[criterion] = sel;
  }
  return out;
}

SweepReport run_sweep(std::span<const AnnotatedInstance> instances, const SweepOptions& options,
                      Judge& judge, const SemanticProvider* provider) {
  if (options.methods.empty()) throw std::invalid_argument("sweep needs at least one method");
  if (options.budgets.empty()) throw std::invalid_argument("sweep needs at least one budget");
  if (options.criteria.empty()) throw std::invalid_argument("sweep needs at least one criterion");

  // Extract once per cell for every instance any criterion will judge.
  std::vector<bool> wanted(instances.size(), false);
  for (std::size_t i = 0; i < instances.size(); ++i) {
    for (CriterionKind c : options.criteria) {
      if (is_eligible(instances[i], c, options.evaluation)) wanted[i] = true;
    }
    if (wanted[i]) require_prepared(instances[i]);
  }
  std::vector<Document> docs;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (wanted[i]) docs.push_back(instances[i].document);
  }

  auto run_cell = [&](const std::optional<ExtractionMethod>& method, std::optional<Budget> budget) {
    SweepCell cell;
    cell.method = method;
    cell.budget = budget;
    const ExtractionBatch batch = extract_all(instances, wanted, method, budget, judge.counter(),
                                              provider, options.evaluation.parallel);
    for (CriterionKind c : options.criteria) {
      cell.criteria.push_back(
          summarize(c, judge_all(instances, batch, c, judge, options.evaluation), judge.config()));
    }
    std::vector<ExtractedDocument> done;
    for (const auto& d : batch.docs) {
      if (d) done.push_back(*d);
    }
    cell.lengths = length_distribution(done);
    cell.positions = position_distribution(done, docs, options.histogram_bins);
    return cell;
  };

  SweepReport report;
  report.select_by = options.select_by;
  report.pareto_max_budget = options.pareto_max_budget;
  for (const ExtractionMethod& m : options.methods) {
    for (Budget b : options.budgets) report.cells.push_back(run_cell(m, b));
  }
  if (options.include_full_document) {
    report.full_document_cell = run_cell(std::nullopt, std::nullopt);
  }
  report.selections = select_best_and_pareto(report.cells, options.criteria, options.select_by,
                                             options.pareto_max_budget);
  return report;
}

}  // namespace longeval
