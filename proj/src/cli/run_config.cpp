#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>

#include "longeval/cli.hpp"
#include "longeval/criterion.hpp"
#include "longeval/errors.hpp"
#include "longeval/extraction.hpp"
#include "longeval/http_util.hpp"
#include "longeval/report.hpp"

namespace longeval::cli {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

[[noreturn]] void bad(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

void check_keys(const json& j, const std::string& path, const std::set<std::string>& allowed) {
  if (!j.is_object()) bad(path.empty() ? "config" : path, "expected an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) bad(path.empty() ? key : path + "." + key, "unknown field");
  }
}

std::string join(const std::string& path, const char* key) {
  return path.empty() ? std::string(key) : path + "." + key;
}

void read(const json& j, const std::string& path, const char* key, std::string& dst) {
  if (!j.contains(key)) return;
  if (!j[key].is_string()) bad(join(path, key), "expected a string");
  dst = j[key].get<std::string>();
}

void read(const json& j, const std::string& path, const char* key, bool& dst) {
  if (!j.contains(key)) return;
  if (!j[key].is_boolean()) bad(join(path, key), "expected true or false");
  dst = j[key].get<bool>();
}

template <typename T>
  requires std::is_unsigned_v<T>
void read(const json& j, const std::string& path, const char* key, T& dst) {
  if (!j.contains(key)) return;
  if (!j[key].is_number_unsigned()) bad(join(path, key), "expected a non-negative integer");
  dst = j[key].get<T>();
}

void read(const json& j, const std::string& path, const char* key, int& dst) {
  if (!j.contains(key)) return;
  if (!j[key].is_number_integer()) bad(join(path, key), "expected an integer");
  dst = j[key].get<int>();
}

void read(const json& j, const std::string& path, const char* key, double& dst) {
  if (!j.contains(key)) return;
  if (!j[key].is_number()) bad(join(path, key), "expected a number");
  dst = j[key].get<double>();
}

void read(const json& j, const std::string& path, const char* key, std::optional<double>& dst) {
  if (!j.contains(key)) return;
  if (j[key].is_null()) {
    dst.reset();
    return;
  }
  if (!j[key].is_number()) bad(join(path, key), "expected a number or null");
  dst = j[key].get<double>();
}

void read(const json& j, const std::string& path, const char* key, std::chrono::milliseconds& dst) {
  std::size_t ms = static_cast<std::size_t>(dst.count());
  read(j, path, key, ms);
  dst = std::chrono::milliseconds(ms);
}

void read(const json& j, const std::string& path, const char* key, std::vector<std::string>& dst) {
  if (!j.contains(key)) return;
  if (!j[key].is_array()) bad(join(path, key), "expected an array of strings");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < j[key].size(); ++i) {
    const json& v = j[key][i];
    if (!v.is_string()) bad(join(path, key) + "[" + std::to_string(i) + "]", "expected a string");
    out.push_back(v.get<std::string>());
  }
  dst = std::move(out);
}

void read(const json& j, const std::string& path, const char* key, std::vector<std::size_t>& dst) {
  if (!j.contains(key)) return;
  if (!j[key].is_array()) bad(join(path, key), "expected an array of integers");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < j[key].size(); ++i) {
    const json& v = j[key][i];
    if (!v.is_number_unsigned()) {
      bad(join(path, key) + "[" + std::to_string(i) + "]", "expected a non-negative integer");
    }
    out.push_back(v.get<std::size_t>());
  }
  dst = std::move(out);
}

std::string valid_method_names(bool allow_full) {
  std::string out = "lead, lead-exact";
  for (MethodKind kind : kAllMethods) {
    if (kind != MethodKind::kLead) out += ", " + std::string(to_string(kind));
  }
  if (allow_full) out += ", full";
  return out;
}

bool is_url(const std::string& endpoint) { return endpoint != "mock"; }

void check_url(const std::string& path, const std::string& endpoint) {
  try {
    http::parse_base_url(endpoint);
  } catch (const ConfigError& e) {
    bad(path, e.what());
  }
}

}  // namespace

ordered_json to_json(const RunConfig& c) {
  const JudgeConfig& jc = c.judge.config;
  ordered_json j;
  j["corpus"] = c.corpus;
  j["methods"] = c.methods;
  j["budgets"] = c.budgets;
  j["criteria"] = c.criteria;
  j["judge"] = {{"endpoint", c.judge.endpoint},
                {"api_key_env", c.judge.api_key_env},
                {"model", jc.model},
                {"context_limit", jc.context_limit},
                {"completion_reserve", jc.completion_reserve},
                {"temperature", jc.temperature},
                {"n", jc.n},
                {"price_per_1k_input", jc.price_per_1k_input},
                {"strict_parse", jc.strict_parse},
                {"max_spend", jc.max_spend ? ordered_json(*jc.max_spend) : ordered_json(nullptr)},
                {"timeout_ms", c.judge.timeout.count()},
                {"mock_noise", c.judge.mock_noise}};
  j["provider"] = {{"endpoint", c.provider.endpoint},
                   {"timeout_ms", c.provider.timeout.count()},
                   {"idf", c.provider.idf}};
  j["counter"] = {{"kind", c.counter}, {"bpe_table", c.bpe_table}};
  j["cache_dir"] = c.cache_dir;
  j["output_dir"] = c.output_dir;
  j["seed"] = c.seed;
  j["parallel"] = c.parallel;
  j["nli_threshold"] = c.nli_threshold ? ordered_json(*c.nli_threshold) : ordered_json(nullptr);
  j["sweep"] = {{"include_human_written", c.sweep.include_human_written},
                {"select_by", c.sweep.select_by},
                {"pareto_max_budget", c.sweep.pareto_max_budget},
                {"histogram_bins", c.sweep.histogram_bins},
                {"include_full_document", c.sweep.include_full_document}};
  j["fixtures"] = {{"docs", c.fixture_docs}, {"levels", c.fixture_levels}};
  return j;
}

void merge_json(RunConfig& c, const json& j) {
  check_keys(j, "",
             {"corpus", "methods", "budgets", "criteria", "judge", "provider", "counter",
              "cache_dir", "output_dir", "seed", "parallel", "nli_threshold", "sweep", "fixtures"});
  read(j, "", "corpus", c.corpus);
  read(j, "", "methods", c.methods);
  read(j, "", "budgets", c.budgets);
  read(j, "", "criteria", c.criteria);
  read(j, "", "cache_dir", c.cache_dir);
  read(j, "", "output_dir", c.output_dir);
  read(j, "", "seed", c.seed);
  read(j, "", "parallel", c.parallel);
  read(j, "", "nli_threshold", c.nli_threshold);

  if (j.contains("judge")) {
    const json& s = j["judge"];
    check_keys(s, "judge",
               {"endpoint", "api_key_env", "model", "context_limit", "completion_reserve",
                "temperature", "n", "price_per_1k_input", "strict_parse", "max_spend",
                "timeout_ms", "mock_noise"});
    JudgeConfig& jc = c.judge.config;
    read(s, "judge", "endpoint", c.judge.endpoint);
    read(s, "judge", "api_key_env", c.judge.api_key_env);
    read(s, "judge", "model", jc.model);
    read(s, "judge", "context_limit", jc.context_limit);
    read(s, "judge", "completion_reserve", jc.completion_reserve);
    read(s, "judge", "temperature", jc.temperature);
    read(s, "judge", "n", jc.n);
    read(s, "judge", "price_per_1k_input", jc.price_per_1k_input);
    read(s, "judge", "strict_parse", jc.strict_parse);
    read(s, "judge", "max_spend", jc.max_spend);
    read(s, "judge", "timeout_ms", c.judge.timeout);
    read(s, "judge", "mock_noise", c.judge.mock_noise);
  }
  if (j.contains("provider")) {
    const json& s = j["provider"];
    check_keys(s, "provider", {"endpoint", "timeout_ms", "idf"});
    read(s, "provider", "endpoint", c.provider.endpoint);
    read(s, "provider", "timeout_ms", c.provider.timeout);
    read(s, "provider", "idf", c.provider.idf);
  }
  if (j.contains("counter")) {
    const json& s = j["counter"];
    check_keys(s, "counter", {"kind", "bpe_table"});
    read(s, "counter", "kind", c.counter);
    read(s, "counter", "bpe_table", c.bpe_table);
  }
  if (j.contains("sweep")) {
    const json& s = j["sweep"];
    check_keys(s, "sweep",
               {"include_human_written", "select_by", "pareto_max_budget", "histogram_bins",
                "include_full_document"});
    read(s, "sweep", "include_human_written", c.sweep.include_human_written);
    read(s, "sweep", "select_by", c.sweep.select_by);
    read(s, "sweep", "pareto_max_budget", c.sweep.pareto_max_budget);
    read(s, "sweep", "histogram_bins", c.sweep.histogram_bins);
    read(s, "sweep", "include_full_document", c.sweep.include_full_document);
  }
  if (j.contains("fixtures")) {
    const json& s = j["fixtures"];
    check_keys(s, "fixtures", {"docs", "levels"});
    read(s, "fixtures", "docs", c.fixture_docs);
    read(s, "fixtures", "levels", c.fixture_levels);
  }
}

RunConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  RunConfig config;
  merge_json(config, j);
  return config;
}

void validate(const RunConfig& c, Command command) {
  if (c.parallel < 1) bad("parallel", "must be at least 1");
  if (c.output_dir.empty()) bad("output_dir", "must not be empty");

  if (command == Command::kFixtures) {
    if (c.fixture_docs < 1) bad("fixtures.docs", "must be at least 1");
    if (c.fixture_levels < 2 || c.fixture_levels > 5) bad("fixtures.levels", "must be in [2, 5]");
    return;
  }

  for (std::size_t i = 0; i < c.criteria.size(); ++i) {
    if (!parse_criterion(c.criteria[i])) {
      bad("criteria[" + std::to_string(i) + "]",
          "unknown criterion '" + c.criteria[i] + "' (valid: consistency, relevance, faithfulness)");
    }
  }
  if (command == Command::kReport) {
    if (!parse_selection_key(c.sweep.select_by)) {
      bad("sweep.select_by", "expected pearson or spearman");
    }
  }

  const bool allow_full = command == Command::kExtract || command == Command::kJudge;
  if (c.methods.empty()) bad("methods", "must not be empty");
  bool needs_provider = false;
  for (std::size_t i = 0; i < c.methods.size(); ++i) {
    const std::string& name = c.methods[i];
    if (allow_full && name == "full") continue;
    const auto m = ExtractionMethod::parse(name);
    if (!m) {
      bad("methods[" + std::to_string(i) + "]",
          "unknown method '" + name + "' (valid: " + valid_method_names(allow_full) + ")");
    }
    needs_provider = needs_provider || m->needs_provider();
  }
  if (c.budgets.empty()) bad("budgets", "must not be empty");
  for (std::size_t i = 0; i < c.budgets.size(); ++i) {
    if (c.budgets[i] < 1) bad("budgets[" + std::to_string(i) + "]", "must be at least 1");
  }
  if (c.nli_threshold && !std::isfinite(*c.nli_threshold)) bad("nli_threshold", "must be finite");
  if (command == Command::kReport) return;

  if (c.corpus.empty()) bad("corpus", "is required");
  if (!std::filesystem::is_regular_file(c.corpus)) bad("corpus", "no such file: " + c.corpus);
  if (c.counter == "bpe") {
    if (c.bpe_table.empty()) bad("counter.bpe_table", "is required when counter.kind is bpe");
    if (!std::filesystem::is_regular_file(c.bpe_table)) {
      bad("counter.bpe_table", "no such file: " + c.bpe_table);
    }
  } else if (c.counter != "whitespace") {
    bad("counter.kind", "expected whitespace or bpe");
  }
  if (needs_provider && is_url(c.provider.endpoint)) check_url("provider.endpoint", c.provider.endpoint);

  if (command == Command::kExtract) return;

  try {
    c.judge.config.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("judge: ") + e.what());
  }
  if (!(c.judge.mock_noise >= 0.0 && c.judge.mock_noise <= 1.0)) {
    bad("judge.mock_noise", "must be in [0, 1]");
  }
  if (is_url(c.judge.endpoint)) {
    check_url("judge.endpoint", c.judge.endpoint);
    const char* key = std::getenv(c.judge.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
      bad("judge.api_key_env", "environment variable " + c.judge.api_key_env +
                                   " is not set and judge.endpoint is not mock");
    }
  }
  if (command == Command::kSweep) {
    if (!parse_selection_key(c.sweep.select_by)) {
      bad("sweep.select_by", "expected pearson or spearman");
    }
    if (c.sweep.histogram_bins < 1) bad("sweep.histogram_bins", "must be at least 1");
  }
}

std::filesystem::path resolved_cache_dir(const RunConfig& config) {
  if (config.cache_dir == "none") return {};
  if (config.cache_dir.empty()) return std::filesystem::path(config.output_dir) / "cache";
  return config.cache_dir;
}

}  // namespace longeval::cli
