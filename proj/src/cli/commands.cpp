#include <CLI11.hpp>
#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>

#include "longeval/chat_client.hpp"
#include "longeval/cli.hpp"
#include "longeval/corpus.hpp"
#include "longeval/errors.hpp"
#include "longeval/extraction.hpp"
#include "longeval/judge.hpp"
#include "longeval/metaeval.hpp"
#include "longeval/parallel.hpp"
#include "longeval/report.hpp"
#include "longeval/semantic.hpp"
#include "longeval/verdict_cache.hpp"

namespace longeval::cli {

using nlohmann::ordered_json;

namespace {

struct Flags {
  std::string config;
  std::string corpus;
  std::vector<std::string> methods;
  std::vector<std::size_t> budgets;
  std::vector<std::string> criteria;
  std::string output;
  std::string cache_dir;
  std::uint64_t seed = 0;
  std::size_t parallel = 0;
  std::string judge_endpoint;
  std::string model;
  std::size_t context_limit = 0;
  double temperature = 0.0;
  int n = 1;
  double max_spend = 0.0;
  double mock_noise = 0.0;
  bool strict_parse = false;
  std::string provider_endpoint;
  std::string counter;
  std::string bpe_table;
  double nli_threshold = 0.0;
  bool include_human_written = false;
  std::string select_by;
  std::size_t pareto_max_budget = 0;
  bool no_full_document = false;
  std::size_t docs = 0;
  std::size_t levels = 0;
  std::string input;
};

void add_options(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "JSON run config; flags override its fields");
  sub->add_option("--corpus", f.corpus, "JSONL corpus");
  sub->add_option("-m,--method", f.methods, "extraction method (repeatable)");
  sub->add_option("-b,--budget", f.budgets, "token budget (repeatable)");
  sub->add_option("-c,--criterion", f.criteria, "consistency, relevance or faithfulness");
  sub->add_option("-o,--output", f.output, "output directory");
  sub->add_option("--cache-dir", f.cache_dir, "verdict cache directory, or none");
  sub->add_option("--seed", f.seed, "seed for fixtures and the noisy mock judge");
  sub->add_option("--parallel", f.parallel, "cap on in-flight requests");
  sub->add_option("--judge-endpoint", f.judge_endpoint, "mock or an OpenAI-compatible base URL");
  sub->add_option("--model", f.model, "judge model");
  sub->add_option("--context-limit", f.context_limit, "judge context window in tokens");
  sub->add_option("--temperature", f.temperature, "judge sampling temperature");
  sub->add_option("--samples", f.n, "judge completions per prompt");
  sub->add_option("--max-spend", f.max_spend, "dollar cap on dispatched prompts");
  sub->add_option("--mock-noise", f.mock_noise, "probability of a +-1 shift from the mock judge");
  sub->add_flag("--strict-parse", f.strict_parse, "require a bare integer judge response");
  sub->add_option("--provider-endpoint", f.provider_endpoint, "mock or semantic service base URL");
  sub->add_option("--counter", f.counter, "whitespace or bpe");
  sub->add_option("--bpe-table", f.bpe_table, "tiktoken-format rank file");
  sub->add_option("--nli-threshold", f.nli_threshold, "minimum NLI score for selection");
  sub->add_flag("--include-human-written", f.include_human_written,
                "keep human-written rows in correlations");
  sub->add_option("--select-by", f.select_by, "pearson or spearman");
  sub->add_option("--pareto-max-budget", f.pareto_max_budget, "largest budget eligible for Pareto");
  sub->add_flag("--no-full-document", f.no_full_document, "skip the full-document baseline");
  sub->add_option("--docs", f.docs, "fixture document count");
  sub->add_option("--levels", f.levels, "fixture corruption levels");
}

bool given(const CLI::App* sub, const char* name) {
  const CLI::Option* opt = sub->get_option_no_throw(name);
  return opt != nullptr && opt->count() > 0;
}

void apply_flags(RunConfig& c, const Flags& f, const CLI::App* sub) {
  if (given(sub, "--corpus")) c.corpus = f.corpus;
  if (given(sub, "--method")) c.methods = f.methods;
  if (given(sub, "--budget")) c.budgets = f.budgets;
  if (given(sub, "--criterion")) c.criteria = f.criteria;
  if (given(sub, "--output")) c.output_dir = f.output;
  if (given(sub, "--cache-dir")) c.cache_dir = f.cache_dir;
  if (given(sub, "--seed")) c.seed = f.seed;
  if (given(sub, "--parallel")) c.parallel = f.parallel;
  if (given(sub, "--judge-endpoint")) c.judge.endpoint = f.judge_endpoint;
  if (given(sub, "--model")) c.judge.config.model = f.model;
  if (given(sub, "--context-limit")) c.judge.config.context_limit = f.context_limit;
  if (given(sub, "--temperature")) c.judge.config.temperature = f.temperature;
  if (given(sub, "--samples")) c.judge.config.n = f.n;
  if (given(sub, "--max-spend")) c.judge.config.max_spend = f.max_spend;
  if (given(sub, "--mock-noise")) c.judge.mock_noise = f.mock_noise;
  if (given(sub, "--strict-parse")) c.judge.config.strict_parse = true;
  if (given(sub, "--provider-endpoint")) c.provider.endpoint = f.provider_endpoint;
  if (given(sub, "--counter")) c.counter = f.counter;
  if (given(sub, "--bpe-table")) c.bpe_table = f.bpe_table;
  if (given(sub, "--nli-threshold")) c.nli_threshold = f.nli_threshold;
  if (given(sub, "--include-human-written")) c.sweep.include_human_written = true;
  if (given(sub, "--select-by")) c.sweep.select_by = f.select_by;
  if (given(sub, "--pareto-max-budget")) c.sweep.pareto_max_budget = f.pareto_max_budget;
  if (given(sub, "--no-full-document")) c.sweep.include_full_document = false;
  if (given(sub, "--docs")) c.fixture_docs = f.docs;
  if (given(sub, "--levels")) c.fixture_levels = f.levels;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

void capture_config(const RunConfig& c) {
  std::filesystem::create_directories(c.output_dir);
  write_text(std::filesystem::path(c.output_dir) / "config.json", to_json(c).dump(2) + "\n");
}

std::unique_ptr<TokenCounter> build_counter(const RunConfig& c) {
  return make_counter(c.counter == "bpe" ? CounterKind::kBpe : CounterKind::kWhitespace,
                      c.bpe_table);
}

std::vector<AnnotatedInstance> load_prepared(const RunConfig& c, const TokenCounter& counter) {
  auto instances = load_corpus(c.corpus);
  prepare(instances, SegmenterConfig::defaults(), counter);
  return instances;
}

// Methods from the config, nullopt standing for the full document.
std::vector<std::optional<ExtractionMethod>> methods_of(const RunConfig& c) {
  std::vector<std::optional<ExtractionMethod>> out;
  for (const std::string& name : c.methods) {
    if (name == "full") {
      out.emplace_back(std::nullopt);
      continue;
    }
    ExtractionMethod m = *ExtractionMethod::parse(name);
    if (m.kind == MethodKind::kNli) m.nli_threshold = c.nli_threshold;
    out.emplace_back(m);
  }
  return out;
}

bool any_needs_provider(const std::vector<std::optional<ExtractionMethod>>& methods) {
  return std::any_of(methods.begin(), methods.end(),
                     [](const auto& m) { return m && m->needs_provider(); });
}

std::unique_ptr<SemanticProvider> build_provider(const RunConfig& c) {
  ProviderSettings s;
  s.endpoint = c.provider.endpoint;
  s.timeout = c.provider.timeout;
  s.max_parallel = c.parallel;
  s.idf = c.provider.idf;
  return make_provider(s);
}

std::unique_ptr<ChatClient> build_client(const RunConfig& c) {
  if (c.judge.endpoint == "mock") {
    return std::make_unique<ProxyJudgeClient>(c.judge.mock_noise, c.seed);
  }
  OpenAIClientConfig oc;
  oc.base_url = c.judge.endpoint;
  oc.api_key = std::getenv(c.judge.api_key_env.c_str());
  oc.timeout = c.judge.timeout;
  oc.max_parallel = c.parallel;
  return std::make_unique<OpenAIChatClient>(std::move(oc));
}

std::unique_ptr<VerdictCache> build_cache(const RunConfig& c) {
  const auto dir = resolved_cache_dir(c);
  if (dir.empty()) return nullptr;
  return std::make_unique<VerdictCache>(dir);
}

std::vector<CriterionKind> criteria_of(const RunConfig& c,
                                       const std::vector<AnnotatedInstance>& instances) {
  std::vector<CriterionKind> out;
  if (!c.criteria.empty()) {
    for (const auto& name : c.criteria) out.push_back(*parse_criterion(name));
    return out;
  }
  std::set<CriterionKind> present;
  for (const auto& inst : instances) {
    for (const auto& [k, v] : inst.human_scores) present.insert(k);
  }
  for (CriterionKind k : kAllCriteria) {
    if (present.contains(k)) out.push_back(k);
  }
  return out;
}

std::string money(double dollars) {
  std::ostringstream s;
  s << '$' << std::fixed << std::setprecision(4) << dollars;
  return s.str();
}

std::string describe(const std::exception_ptr& e) {
  try {
    std::rethrow_exception(e);
  } catch (const std::exception& ex) {
    return ex.what();
  } catch (...) {
    return "unknown error";
  }
}

ordered_json budget_json(const std::optional<ExtractionMethod>& m, Budget b) {
  return m ? ordered_json(b.max_tokens()) : ordered_json(nullptr);
}

// One unit of extraction work: instance i under (method, budget).
struct ExtractJob {
  std::size_t instance;
  std::optional<ExtractionMethod> method;
  Budget budget;
};

std::vector<ExtractJob> extract_jobs(const RunConfig& c, std::size_t n_instances) {
  std::vector<ExtractJob> jobs;
  for (const auto& m : methods_of(c)) {
    // The full document ignores the budget grid.
    const std::vector<std::size_t> budgets = m ? c.budgets : std::vector<std::size_t>{1};
    for (std::size_t b : budgets) {
      for (std::size_t i = 0; i < n_instances; ++i) jobs.push_back({i, m, Budget(b)});
    }
  }
  return jobs;
}

ExtractedDocument run_extract(const ExtractJob& job, const AnnotatedInstance& inst,
                              const TokenCounter& counter, const SemanticProvider* provider) {
  if (job.method) {
    return extract(inst.document, inst.summary, *job.method, job.budget, counter, provider);
  }
  ExtractedDocument full;
  full.source_id = inst.document.id;
  full.text = inst.document.text;
  full.token_count = counter.count(full.text);
  for (const auto& s : inst.document.sentences) full.sentence_indices.push_back(s.index);
  return full;
}

std::string job_label(const ExtractJob& job) {
  return job.method ? job.method->name() + "@" + std::to_string(job.budget.max_tokens()) : "full";
}

int cmd_fixtures(const RunConfig& config, std::ostream& out) {
  RunConfig c = config;
  std::filesystem::create_directories(c.output_dir);
  const auto path = std::filesystem::path(c.output_dir) / "corpus.jsonl";
  const auto instances = generate_synthetic_corpus(c.seed, c.fixture_docs, c.fixture_levels);
  write_corpus(path, instances);
  c.corpus = path.string();
  capture_config(c);
  out << "wrote " << instances.size() << " instances to " << path.string() << "\n";
  return kExitOk;
}

int cmd_extract(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const auto counter = build_counter(c);
  const auto instances = load_prepared(c, *counter);
  const auto methods = methods_of(c);
  const auto provider = any_needs_provider(methods) ? build_provider(c) : nullptr;
  capture_config(c);

  const auto jobs = extract_jobs(c, instances.size());
  std::vector<std::optional<ExtractedDocument>> results(jobs.size());
  const auto errors = parallel_for(jobs.size(), c.parallel, [&](std::size_t k) {
    results[k] = run_extract(jobs[k], instances[jobs[k].instance], *counter, provider.get());
  });

  std::ostringstream rows;
  std::size_t failed = 0;
  std::map<std::string, std::vector<ExtractedDocument>> by_cell;
  std::vector<std::string> cell_order;
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    const ExtractJob& job = jobs[k];
    const AnnotatedInstance& inst = instances[job.instance];
    ordered_json row;
    row["id"] = inst.id;
    row["doc_id"] = inst.document.id;
    row["method"] = job.method ? job.method->name() : "full";
    row["budget"] = budget_json(job.method, job.budget);
    if (errors[k]) {
      ++failed;
      row["error"] = describe(errors[k]);
      err << inst.id << " " << job_label(job) << ": " << row["error"].get<std::string>() << "\n";
      rows << row.dump() << "\n";
      continue;
    }
    const ExtractedDocument& e = *results[k];
    row["token_count"] = e.token_count;
    row["n_sentences"] = inst.document.sentences.size();
    row["sentence_indices"] = e.sentence_indices;
    if (!e.sentence_scores.empty()) {
      ordered_json scores = ordered_json::array();
      for (const auto& [idx, score] : e.sentence_scores) scores.push_back(score);
      row["sentence_scores"] = scores;
    }
    row["text"] = e.text;
    rows << row.dump() << "\n";
    const std::string label = job_label(job);
    if (!by_cell.contains(label)) cell_order.push_back(label);
    by_cell[label].push_back(e);
  }
  write_text(std::filesystem::path(c.output_dir) / "extractions.jsonl", rows.str());

  out << std::left << std::setw(20) << "cell" << std::right << std::setw(6) << "n" << std::setw(10)
      << "mean" << std::setw(8) << "p25" << std::setw(8) << "p75" << "\n";
  for (const auto& label : cell_order) {
    const LengthStats s = length_distribution(by_cell[label]);
    out << std::left << std::setw(20) << label << std::right << std::setw(6) << s.n << std::fixed
        << std::setprecision(1) << std::setw(10) << s.mean << std::setprecision(0) << std::setw(8)
        << s.p25 << std::setw(8) << s.p75 << "\n";
    out.unsetf(std::ios::floatfield);
  }
  out << "extractions: " << jobs.size() - failed << " ok, " << failed << " failed\n";
  return failed == 0 ? kExitOk : kExitPartial;
}

int cmd_judge(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const auto counter = build_counter(c);
  const auto instances = load_prepared(c, *counter);
  const auto methods = methods_of(c);
  const auto provider = any_needs_provider(methods) ? build_provider(c) : nullptr;
  const auto client = build_client(c);
  const auto cache = build_cache(c);
  Judge judge(c.judge.config, *client, *counter, cache.get());
  capture_config(c);

  const auto jobs = extract_jobs(c, instances.size());
  std::vector<std::optional<ExtractedDocument>> extracted(jobs.size());
  const auto extract_errors = parallel_for(jobs.size(), c.parallel, [&](std::size_t k) {
    extracted[k] = run_extract(jobs[k], instances[jobs[k].instance], *counter, provider.get());
  });

  const std::vector<CriterionKind> explicit_criteria =
      c.criteria.empty() ? std::vector<CriterionKind>{} : criteria_of(c, instances);
  struct Work {
    std::size_t job;
    CriterionKind criterion;
    std::optional<PreparedJudgement> prepared;
    std::string error;
  };
  std::vector<Work> work;
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    const AnnotatedInstance& inst = instances[jobs[k].instance];
    std::vector<CriterionKind> criteria = explicit_criteria;
    if (criteria.empty()) {
      for (const auto& [kind, score] : inst.human_scores) criteria.push_back(kind);
    }
    for (CriterionKind kind : criteria) {
      Work w{k, kind, std::nullopt, {}};
      if (extract_errors[k]) {
        w.error = "extraction failed: " + describe(extract_errors[k]);
      } else {
        try {
          w.prepared = judge.prepare(extracted[k]->text, inst.summary.text, kind);
        } catch (const std::exception& e) {
          w.error = e.what();
        }
      }
      work.push_back(std::move(w));
    }
  }

  double projected = 0.0;
  std::size_t uncached = 0;
  for (const Work& w : work) {
    if (w.prepared && !judge.is_cached(*w.prepared)) {
      projected += cost_of(w.prepared->prompt.tokens, judge.config());
      ++uncached;
    }
  }
  out << "projected cost: " << money(projected) << " for " << uncached << " uncached of "
      << work.size() << " prompts\n";
  if (c.judge.config.max_spend && projected > *c.judge.config.max_spend) {
    err << "refusing to dispatch: projected cost " << money(projected) << " exceeds --max-spend "
        << money(*c.judge.config.max_spend) << "\n";
    return kExitPartial;
  }

  std::vector<std::optional<JudgeVerdict>> verdicts(work.size());
  std::mutex progress;
  std::size_t done = 0;
  const auto judge_errors = parallel_for(work.size(), c.parallel, [&](std::size_t i) {
    if (!work[i].prepared) throw Error(work[i].error);
    verdicts[i] = judge.run(*work[i].prepared);
    std::lock_guard lock(progress);
    ++done;
    err << "[" << done << "/" << work.size() << "] spent " << money(judge.spent()) << "\n";
  });

  std::ostringstream rows;
  std::size_t failed = 0;
  std::size_t cached = 0;
  for (std::size_t i = 0; i < work.size(); ++i) {
    const ExtractJob& job = jobs[work[i].job];
    ordered_json row;
    row["id"] = instances[job.instance].id;
    row["method"] = job.method ? job.method->name() : "full";
    row["budget"] = budget_json(job.method, job.budget);
    row["criterion"] = to_string(work[i].criterion);
    if (judge_errors[i]) {
      ++failed;
      row["error"] = describe(judge_errors[i]);
      err << row["id"].get<std::string>() << " " << job_label(job) << " "
          << to_string(work[i].criterion) << ": " << row["error"].get<std::string>() << "\n";
    } else {
      const JudgeVerdict& v = *verdicts[i];
      cached += v.cached ? 1 : 0;
      row["score"] = v.score;
      row["samples"] = v.samples;
      row["prompt_tokens"] = v.prompt_tokens;
      row["article_truncated"] = work[i].prepared->prompt.article_truncated;
      row["cost"] = v.cost;
      row["cached"] = v.cached;
      row["raw_response"] = v.raw_response;
    }
    rows << row.dump() << "\n";
  }
  write_text(std::filesystem::path(c.output_dir) / "verdicts.jsonl", rows.str());

  out << "verdicts: " << work.size() - failed << " ok (" << cached << " cached), " << failed
      << " failed\n";
  out << "api_calls: " << judge.api_calls() << "\n";
  out << "spent: " << money(judge.spent()) << "\n";
  return failed == 0 ? kExitOk : kExitPartial;
}

int cmd_sweep(const RunConfig& c, std::ostream& out) {
  const auto counter = build_counter(c);
  const auto instances = load_prepared(c, *counter);
  SweepOptions options;
  for (const auto& m : methods_of(c)) options.methods.push_back(*m);
  for (std::size_t b : c.budgets) options.budgets.emplace_back(b);
  options.criteria = criteria_of(c, instances);
  options.include_full_document = c.sweep.include_full_document;
  options.select_by = *parse_selection_key(c.sweep.select_by);
  options.pareto_max_budget = c.sweep.pareto_max_budget;
  options.histogram_bins = c.sweep.histogram_bins;
  options.evaluation.include_human_written = c.sweep.include_human_written;
  options.evaluation.parallel = c.parallel;

  std::vector<std::optional<ExtractionMethod>> methods(options.methods.begin(),
                                                       options.methods.end());
  const auto provider = any_needs_provider(methods) ? build_provider(c) : nullptr;
  const auto client = build_client(c);
  const auto cache = build_cache(c);
  Judge judge(c.judge.config, *client, *counter, cache.get());
  capture_config(c);

  const SweepReport report = run_sweep(instances, options, judge, provider.get());
  write_report_files(report, c.output_dir);
  render_tables(report, out);

  std::size_t failures = 0;
  for (const auto& cell : report.cells) {
    for (const auto& cc : cell.criteria) failures += cc.failures.size();
  }
  if (report.full_document_cell) {
    for (const auto& cc : report.full_document_cell->criteria) failures += cc.failures.size();
  }
  out << "cells: " << report.cells.size() << (report.full_document_cell ? " + full document" : "")
      << ", failures: " << failures << "\n";
  out << "api_calls: " << judge.api_calls() << "\n";
  out << "spent: " << money(judge.spent()) << "\n";
  return failures == 0 ? kExitOk : kExitPartial;
}

int cmd_report(const RunConfig& c, const std::filesystem::path& input, std::ostream& out) {
  const SweepReport report = load_report(input);
  render_tables(report, out);

  std::vector<ExtractionMethod> methods;
  for (const auto& m : methods_of(c)) methods.push_back(*m);
  std::vector<Budget> budgets;
  for (std::size_t b : c.budgets) budgets.emplace_back(b);
  std::vector<CriterionKind> criteria;
  for (const auto& name : c.criteria) criteria.push_back(*parse_criterion(name));
  if (criteria.empty()) {
    for (const auto& [kind, sel] : report.selections) criteria.push_back(kind);
  }
  const auto gaps = find_gaps(report, methods, budgets, criteria);
  if (gaps.empty()) return kExitOk;
  out << "gaps (" << gaps.size() << "):\n";
  for (const auto& g : gaps) out << "  " << g << "\n";
  return kExitPartial;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Extract-then-evaluate scoring of long-document summaries", "longeval"};
  app.require_subcommand(1);
  Flags flags;
  struct Sub {
    CLI::App* app;
    Command command;
  };
  const std::vector<Sub> subs = {
      {app.add_subcommand("fixtures", "write a synthetic corpus"), Command::kFixtures},
      {app.add_subcommand("extract", "write budgeted extractions as JSONL"), Command::kExtract},
      {app.add_subcommand("judge", "score summaries with the judge"), Command::kJudge},
      {app.add_subcommand("sweep", "correlate judge scores with human scores over a grid"),
       Command::kSweep},
      {app.add_subcommand("report", "render a stored sweep and list grid gaps"), Command::kReport},
  };
  for (const Sub& s : subs) add_options(s.app, flags);
  subs.back().app->add_option("--input", flags.input, "sweep output directory (default: --output)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  const Sub* chosen = nullptr;
  for (const Sub& s : subs) {
    if (s.app->parsed()) chosen = &s;
  }
  try {
    RunConfig config;
    std::filesystem::path input;
    if (given(chosen->app, "--config")) {
      config = load_config_file(flags.config);
    } else if (chosen->command == Command::kReport) {
      // A sweep directory carries the config that produced it.
      const std::string dir = given(chosen->app, "--input")    ? flags.input
                              : given(chosen->app, "--output") ? flags.output
                                                               : config.output_dir;
      if (std::filesystem::is_regular_file(std::filesystem::path(dir) / "config.json")) {
        config = load_config_file(std::filesystem::path(dir) / "config.json");
      }
    }
    apply_flags(config, flags, chosen->app);
    validate(config, chosen->command);
    input = given(chosen->app, "--input") ? std::filesystem::path(flags.input)
                                          : std::filesystem::path(config.output_dir);

    switch (chosen->command) {
      case Command::kFixtures:
        return cmd_fixtures(config, out);
      case Command::kExtract:
        return cmd_extract(config, out, err);
      case Command::kJudge:
        return cmd_judge(config, out, err);
      case Command::kSweep:
        return cmd_sweep(config, out);
      case Command::kReport:
        return cmd_report(config, input, out);
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitPartial;
  }
  return kExitPartial;
}

}  // namespace longeval::cli
