#include "longeval/report.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>

#include "longeval/errors.hpp"

namespace longeval {

using nlohmann::ordered_json;

namespace {

ordered_json cell_json(const SweepCell& cell) {
  ordered_json j;
  j["method"] = cell.method_name();
  if (cell.method && cell.method->nli_threshold) {
    j["nli_threshold"] = *cell.method->nli_threshold;
  }
  j["budget"] = cell.budget ? ordered_json(cell.budget->max_tokens()) : ordered_json(nullptr);
  j["lengths"] = {{"n", cell.lengths.n},
                  {"mean", cell.lengths.mean},
                  {"p25", cell.lengths.p25},
                  {"p75", cell.lengths.p75}};
  ordered_json positions = ordered_json::array();
  for (const auto& b : cell.positions) positions.push_back(b.count);
  j["positions"] = positions;
  ordered_json criteria = ordered_json::array();
  for (const CriterionCell& c : cell.criteria) {
    ordered_json cj;
    cj["criterion"] = to_string(c.criterion);
    if (c.correlation) {
      cj["pearson"] = c.correlation->pearson_r;
      cj["spearman"] = c.correlation->spearman_rho;
      cj["n"] = c.correlation->n;
    } else {
      cj["pearson"] = nullptr;
      cj["spearman"] = nullptr;
      cj["n"] = nullptr;
      cj["correlation_error"] = c.correlation_error;
    }
    cj["n_judged"] = c.n_judged;
    cj["total_prompt_tokens"] = c.total_prompt_tokens;
    cj["avg_prompt_tokens"] = c.avg_prompt_tokens;
    cj["avg_cost"] = c.avg_cost;
    cj["total_cost"] = c.total_cost;
    ordered_json failures = ordered_json::array();
    for (const auto& f : c.failures) {
      failures.push_back({{"id", f.instance_id}, {"message", f.message}});
    }
    cj["failures"] = failures;
    criteria.push_back(cj);
  }
  j["criteria"] = criteria;
  return j;
}

SweepCell parse_cell(const ordered_json& j) {
  SweepCell cell;
  const std::string method = j.at("method").get<std::string>();
  if (method != "full") {
    cell.method = ExtractionMethod::parse(method);
    if (!cell.method) throw Error("sweep.json: unknown method " + method);
    if (j.contains("nli_threshold")) cell.method->nli_threshold = j["nli_threshold"].get<double>();
  }
  if (!j.at("budget").is_null()) cell.budget = Budget(j["budget"].get<std::size_t>());
  const auto& l = j.at("lengths");
  cell.lengths = {l.at("n").get<std::size_t>(), l.at("mean").get<double>(),
                  l.at("p25").get<double>(), l.at("p75").get<double>()};
  std::size_t bin = 0;
  for (const auto& count : j.at("positions")) {
    cell.positions.push_back({bin++, count.get<std::size_t>()});
  }
  for (const auto& cj : j.at("criteria")) {
    CriterionCell c;
    const std::string name = cj.at("criterion").get<std::string>();
    const auto kind = parse_criterion(name);
    if (!kind) throw Error("sweep.json: unknown criterion " + name);
    c.criterion = *kind;
    if (!cj.at("pearson").is_null()) {
      c.correlation = CorrelationResult{cj["pearson"].get<double>(), cj.at("spearman").get<double>(),
                                        cj.at("n").get<std::size_t>()};
    } else {
      c.correlation_error = cj.value("correlation_error", std::string());
    }
    c.n_judged = cj.at("n_judged").get<std::size_t>();
    c.total_prompt_tokens = cj.at("total_prompt_tokens").get<std::size_t>();
    c.avg_prompt_tokens = cj.at("avg_prompt_tokens").get<double>();
    c.avg_cost = cj.at("avg_cost").get<double>();
    c.total_cost = cj.at("total_cost").get<double>();
    for (const auto& f : cj.at("failures")) {
      c.failures.push_back({f.at("id").get<std::string>(), f.at("message").get<std::string>()});
    }
    cell.criteria.push_back(std::move(c));
  }
  return cell;
}

std::string budget_text(const SweepCell& cell) {
  return cell.budget ? std::to_string(cell.budget->max_tokens()) : std::string();
}

// Report cells in output order: grid cells, then the baseline.
std::vector<const SweepCell*> all_cells(const SweepReport& report) {
  std::vector<const SweepCell*> cells;
  for (const auto& c : report.cells) cells.push_back(&c);
  if (report.full_document_cell) cells.push_back(&*report.full_document_cell);
  return cells;
}

bool is_selected(const SweepReport& report, CriterionKind criterion, const SweepCell* cell,
                 bool pareto) {
  const auto it = report.selections.find(criterion);
  if (it == report.selections.end()) return false;
  const auto& index = pareto ? it->second.pareto : it->second.best;
  return index && &report.cells[*index] == cell;
}

std::string label(const SweepCell& cell) {
  return cell.budget ? cell.method_name() + "@" + budget_text(cell) : cell.method_name();
}

}  // namespace

std::string_view to_string(SelectionKey key) {
  return key == SelectionKey::kPearson ? "pearson" : "spearman";
}

std::optional<SelectionKey> parse_selection_key(std::string_view name) {
  if (name == "pearson") return SelectionKey::kPearson;
  if (name == "spearman") return SelectionKey::kSpearman;
  return std::nullopt;
}

std::string format_double(double value) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return ec == std::errc() ? std::string(buf, end) : std::string("nan");
}

std::string sweep_json(const SweepReport& report) {
  ordered_json j;
  j["select_by"] = to_string(report.select_by);
  j["pareto_max_budget"] = report.pareto_max_budget;
  ordered_json cells = ordered_json::array();
  for (const auto& c : report.cells) cells.push_back(cell_json(c));
  j["cells"] = cells;
  j["full_document"] =
      report.full_document_cell ? cell_json(*report.full_document_cell) : ordered_json(nullptr);
  ordered_json selections = ordered_json::object();
  for (const auto& [criterion, sel] : report.selections) {
    auto ref = [&](const std::optional<std::size_t>& index) {
      if (!index) return ordered_json(nullptr);
      const SweepCell& cell = report.cells.at(*index);
      return ordered_json{{"index", *index},
                          {"method", cell.method_name()},
                          {"budget", cell.budget ? ordered_json(cell.budget->max_tokens())
                                                 : ordered_json(nullptr)}};
    };
    selections[std::string(to_string(criterion))] = {{"best", ref(sel.best)},
                                                     {"pareto", ref(sel.pareto)}};
  }
  j["selections"] = selections;
  return j.dump(2) + "\n";
}

SweepReport parse_sweep_json(const std::string& text) {
  SweepReport report;
  try {
    const ordered_json j = ordered_json::parse(text);
    const auto key = parse_selection_key(j.at("select_by").get<std::string>());
    if (!key) throw Error("sweep.json: unknown select_by");
    report.select_by = *key;
    report.pareto_max_budget = j.at("pareto_max_budget").get<std::size_t>();
    for (const auto& c : j.at("cells")) report.cells.push_back(parse_cell(c));
    if (!j.at("full_document").is_null()) report.full_document_cell = parse_cell(j["full_document"]);
    for (const auto& [name, sel] : j.at("selections").items()) {
      const auto kind = parse_criterion(name);
      if (!kind) throw Error("sweep.json: unknown criterion " + name);
      Selection s;
      if (!sel.at("best").is_null()) s.best = sel["best"].at("index").get<std::size_t>();
      if (!sel.at("pareto").is_null()) s.pareto = sel["pareto"].at("index").get<std::size_t>();
      if ((s.best && *s.best >= report.cells.size()) ||
          (s.pareto && *s.pareto >= report.cells.size())) {
        throw Error("sweep.json: selection index out of range");
      }
      report.selections[*kind] = s;
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("sweep.json: ") + e.what());
  }
  return report;
}

std::string sweep_csv(const SweepReport& report) {
  std::ostringstream out;
  out << "method,budget,criterion,pearson,spearman,n,n_judged,failures,avg_prompt_tokens,avg_cost,"
         "total_cost,best,pareto\n";
  for (const SweepCell* cell : all_cells(report)) {
    for (const CriterionCell& c : cell->criteria) {
      out << cell->method_name() << ',' << budget_text(*cell) << ',' << to_string(c.criterion)
          << ',';
      if (c.correlation) {
        out << format_double(c.correlation->pearson_r) << ','
            << format_double(c.correlation->spearman_rho) << ',' << c.correlation->n;
      } else {
        out << ",,";
      }
      out << ',' << c.n_judged << ',' << c.failures.size() << ','
          << format_double(c.avg_prompt_tokens) << ',' << format_double(c.avg_cost) << ','
          << format_double(c.total_cost) << ','
          << (is_selected(report, c.criterion, cell, false) ? 1 : 0) << ','
          << (is_selected(report, c.criterion, cell, true) ? 1 : 0) << '\n';
    }
  }
  return out.str();
}

std::string positions_csv(const SweepReport& report) {
  std::ostringstream out;
  out << "method,budget,bin,bin_start,bin_end,count\n";
  for (const SweepCell* cell : all_cells(report)) {
    const double bins = static_cast<double>(cell->positions.size());
    for (const HistogramBin& b : cell->positions) {
      out << cell->method_name() << ',' << budget_text(*cell) << ',' << b.bin << ','
          << format_double(static_cast<double>(b.bin) / bins) << ','
          << format_double(static_cast<double>(b.bin + 1) / bins) << ',' << b.count << '\n';
    }
  }
  return out.str();
}

std::string lengths_csv(const SweepReport& report) {
  std::ostringstream out;
  out << "method,budget,n,mean,p25,p75\n";
  for (const SweepCell* cell : all_cells(report)) {
    out << cell->method_name() << ',' << budget_text(*cell) << ',' << cell->lengths.n << ','
        << format_double(cell->lengths.mean) << ',' << format_double(cell->lengths.p25) << ','
        << format_double(cell->lengths.p75) << '\n';
  }
  return out.str();
}

void write_report_files(const SweepReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto write = [&](const char* name, const std::string& content) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + (dir / name).string());
    out << content;
  };
  write("sweep.json", sweep_json(report));
  write("sweep.csv", sweep_csv(report));
  write("positions.csv", positions_csv(report));
  write("lengths.csv", lengths_csv(report));
}

SweepReport load_report(const std::filesystem::path& dir) {
  std::ifstream in(dir / "sweep.json", std::ios::binary);
  if (!in) throw Error("cannot read " + (dir / "sweep.json").string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_sweep_json(buf.str());
}

void render_tables(const SweepReport& report, std::ostream& out) {
  std::vector<CriterionKind> criteria;
  for (const SweepCell* cell : all_cells(report)) {
    for (const auto& c : cell->criteria) {
      if (std::find(criteria.begin(), criteria.end(), c.criterion) == criteria.end()) {
        criteria.push_back(c.criterion);
      }
    }
  }
  const auto old_flags = out.flags();
  const auto old_precision = out.precision();
  for (CriterionKind criterion : criteria) {
    out << "== " << to_string(criterion) << " (selection by " << to_string(report.select_by)
        << ", pareto budget <= " << report.pareto_max_budget << ")\n";
    out << std::left << std::setw(20) << "cell" << std::right << std::setw(9) << "r"
        << std::setw(9) << "rho" << std::setw(6) << "n" << std::setw(11) << "avg_tokens"
        << std::setw(11) << "avg_cost" << "  mark\n";
    for (const SweepCell* cell : all_cells(report)) {
      const CriterionCell* c = cell->find(criterion);
      if (c == nullptr) continue;
      out << std::left << std::setw(20) << label(*cell) << std::right << std::fixed;
      if (c->correlation) {
        out << std::setprecision(4) << std::setw(9) << c->correlation->pearson_r << std::setw(9)
            << c->correlation->spearman_rho << std::setw(6) << c->correlation->n;
      } else {
        out << std::setw(9) << "-" << std::setw(9) << "-" << std::setw(6) << "-";
      }
      out << std::setprecision(1) << std::setw(11) << c->avg_prompt_tokens << std::setprecision(4)
          << std::setw(11) << c->avg_cost;
      std::string mark;
      if (is_selected(report, criterion, cell, false)) mark += "best ";
      if (is_selected(report, criterion, cell, true)) mark += "pareto ";
      if (!c->failures.empty()) mark += std::to_string(c->failures.size()) + " failed ";
      if (!c->correlation) mark += "(" + c->correlation_error + ")";
      while (!mark.empty() && mark.back() == ' ') mark.pop_back();
      if (!mark.empty()) out << "  " << mark;
      out << '\n';
      out.flags(old_flags);
    }
    out << '\n';
  }
  out.precision(old_precision);
}

std::vector<std::string> find_gaps(const SweepReport& report,
                                   std::span<const ExtractionMethod> methods,
                                   std::span<const Budget> budgets,
                                   std::span<const CriterionKind> criteria) {
  std::vector<std::string> gaps;
  for (const ExtractionMethod& m : methods) {
    for (Budget b : budgets) {
      const SweepCell* found = nullptr;
      for (const auto& cell : report.cells) {
        if (cell.method == m && cell.budget == b) {
          found = &cell;
          break;
        }
      }
      const std::string where = m.name() + "@" + std::to_string(b.max_tokens());
      if (found == nullptr) {
        gaps.push_back(where + ": missing cell");
        continue;
      }
      for (CriterionKind c : criteria) {
        const CriterionCell* cc = found->find(c);
        if (cc == nullptr) {
          gaps.push_back(where + " " + std::string(to_string(c)) + ": not evaluated");
        } else if (!cc->correlation) {
          gaps.push_back(where + " " + std::string(to_string(c)) + ": no correlation (" +
                         cc->correlation_error + ")");
        }
      }
    }
  }
  return gaps;
}

}  // namespace longeval
