#include <catch_amalgamated.hpp>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "longeval/chat_client.hpp"
#include "longeval/errors.hpp"
#include "longeval/report.hpp"
#include "test_util.hpp"

using namespace longeval;
using nlohmann::json;

namespace {

const WhitespaceCounter kWs;

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

SweepReport small_report() {
  auto corpus = generate_synthetic_corpus(11, 3, 3);
  prepare(corpus, SegmenterConfig::defaults(), kWs);
  ProxyJudgeClient proxy;
  Judge judge(JudgeConfig{}, proxy, kWs);
  SweepOptions opt;
  opt.methods = {ExtractionMethod{MethodKind::kLead, {}, {}},
                 ExtractionMethod{MethodKind::kNli, {}, 0.1}};
  opt.budgets = {Budget(128), Budget(2048)};
  opt.criteria = {CriterionKind::kRelevance};
  opt.histogram_bins = 4;
  MockSemanticProvider mock;
  return run_sweep(corpus, opt, judge, &mock);
}

}  // namespace

TEST_CASE("doubles print in shortest round-trip form") {
  CHECK(format_double(0.15) == "0.15");
  CHECK(format_double(1.0) == "1");
  CHECK(std::stod(format_double(0.1 + 0.2)) == 0.1 + 0.2);
}

TEST_CASE("selection key names") {
  CHECK(parse_selection_key("spearman") == SelectionKey::kSpearman);
  CHECK(to_string(SelectionKey::kPearson) == "pearson");
  CHECK_FALSE(parse_selection_key("kendall"));
}

TEST_CASE("sweep json round-trips exactly") {
  const SweepReport r = small_report();
  const std::string text = sweep_json(r);
  const SweepReport back = parse_sweep_json(text);
  CHECK(sweep_json(back) == text);
  CHECK(back.cells.size() == 4);
  CHECK(back.cells[2].method->nli_threshold == 0.1);
  CHECK(back.full_document_cell.has_value());
  CHECK(sweep_csv(back) == sweep_csv(r));

  const json j = json::parse(text);
  CHECK(j["select_by"] == "pearson");
  CHECK(j["pareto_max_budget"] == 1024);
  CHECK(j["cells"][0]["method"] == "lead");
  CHECK(j["cells"][0]["budget"] == 128);
  CHECK(j["full_document"]["budget"].is_null());
  CHECK(j["selections"]["relevance"]["best"]["index"] == 0);
  CHECK(j["cells"][0]["positions"].size() == 4);
  CHECK_THROWS_AS(parse_sweep_json("{}"), Error);
}

TEST_CASE("csv files have one row per cell and criterion") {
  const SweepReport r = small_report();
  const auto sweep = lines(sweep_csv(r));
  REQUIRE(sweep.size() == 1 + 5);
  CHECK(sweep[0] ==
        "method,budget,criterion,pearson,spearman,n,n_judged,failures,avg_prompt_tokens,"
        "avg_cost,total_cost,best,pareto");
  CHECK(sweep[1].starts_with("lead,128,relevance,1,1,9,9,0,"));
  CHECK(sweep[1].ends_with(",1,1"));
  CHECK(sweep[5].starts_with("full,,relevance,"));

  const auto pos = lines(positions_csv(r));
  CHECK(pos.size() == 1 + 5 * 4);
  CHECK(pos[0] == "method,budget,bin,bin_start,bin_end,count");
  CHECK(pos[2].starts_with("lead,128,1,0.25,0.5,"));

  const auto len = lines(lengths_csv(r));
  CHECK(len.size() == 1 + 5);
  CHECK(len[0] == "method,budget,n,mean,p25,p75");
}

TEST_CASE("report files are written and reloaded") {
  const auto dir = longeval::testing::temp_dir("report-files");
  const SweepReport r = small_report();
  write_report_files(r, dir);
  for (const char* f : {"sweep.json", "sweep.csv", "positions.csv", "lengths.csv"}) {
    CHECK(std::filesystem::exists(dir / f));
  }
  CHECK(sweep_json(load_report(dir)) == sweep_json(r));
  CHECK_THROWS_AS(load_report(dir / "missing"), Error);

  std::ostringstream table;
  render_tables(r, table);
  CHECK(table.str().find("relevance") != std::string::npos);
  CHECK(table.str().find("lead") != std::string::npos);
}

TEST_CASE("gaps list missing cells and criteria") {
  const SweepReport r = small_report();
  const std::vector<ExtractionMethod> methods = {ExtractionMethod{MethodKind::kLead, {}, {}},
                                                 ExtractionMethod{MethodKind::kRouge2, {}, {}}};
  const std::vector<Budget> budgets = {Budget(128)};
  const std::vector<CriterionKind> crit = {CriterionKind::kRelevance, CriterionKind::kConsistency};
  const auto gaps = find_gaps(r, methods, budgets, crit);
  CHECK(gaps == std::vector<std::string>{"lead@128 consistency: not evaluated",
                                         "rouge2@128: missing cell"});
  const std::vector<ExtractionMethod> lead_only = {methods[0]};
  const std::vector<CriterionKind> rel = {CriterionKind::kRelevance};
  CHECK(find_gaps(r, lead_only, budgets, rel).empty());
}
