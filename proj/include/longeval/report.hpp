#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "longeval/metaeval.hpp"

namespace longeval {

std::string_view to_string(SelectionKey key);
std::optional<SelectionKey> parse_selection_key(std::string_view name);

// Shortest decimal that round-trips to the same double.
std::string format_double(double value);

// sweep.json: the whole report, deterministic (no timestamps, fixed key order).
std::string sweep_json(const SweepReport& report);
SweepReport parse_sweep_json(const std::string& text);

// One row per (cell, criterion): method,budget,criterion,pearson,spearman,n,
// n_judged,failures,avg_prompt_tokens,avg_cost,total_cost,best,pareto
std::string sweep_csv(const SweepReport& report);
// method,budget,bin,bin_start,bin_end,count
std::string positions_csv(const SweepReport& report);
// method,budget,n,mean,p25,p75
std::string lengths_csv(const SweepReport& report);

// Writes sweep.json, sweep.csv, positions.csv and lengths.csv into `dir`.
void write_report_files(const SweepReport& report, const std::filesystem::path& dir);
SweepReport load_report(const std::filesystem::path& dir);

// Human-readable per-criterion tables with Best and Pareto markers.
void render_tables(const SweepReport& report, std::ostream& out);

// Requested (method, budget, criterion) combinations with no cell or no
// correlation in the report, one line each.
std::vector<std::string> find_gaps(const SweepReport& report,
                                   std::span<const ExtractionMethod> methods,
                                   std::span<const Budget> budgets,
                                   std::span<const CriterionKind> criteria);

}  // namespace longeval
