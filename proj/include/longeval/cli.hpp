#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "longeval/judge.hpp"

namespace longeval::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitPartial = 1;
inline constexpr int kExitConfig = 2;

struct JudgeSettings {
  // "mock" selects the offline proxy judge; anything else is an
  // OpenAI-compatible base URL.
  std::string endpoint = "mock";
  std::string api_key_env = "OPENAI_API_KEY";
  JudgeConfig config;
  std::chrono::milliseconds timeout{60000};
  double mock_noise = 0.0;
};

struct ProviderConfig {
  std::string endpoint = "mock";
  std::chrono::milliseconds timeout{30000};
  bool idf = false;
};

struct SweepSettings {
  bool include_human_written = false;
  std::string select_by = "pearson";
  std::size_t pareto_max_budget = 1024;
  std::size_t histogram_bins = 20;
  bool include_full_document = true;
};

struct RunConfig {
  std::string corpus;
  // Method names; extract and judge also accept "full".
  std::vector<std::string> methods = {"lead", "rouge1", "rouge2", "rouge12", "bertscore", "nli"};
  std::vector<std::size_t> budgets = {128, 256, 512, 768, 1024, 1536, 2048, 4096};
  // Empty: every criterion scored anywhere in the corpus.
  std::vector<std::string> criteria;
  JudgeSettings judge;
  ProviderConfig provider;
  std::string counter = "whitespace";
  std::string bpe_table;
  // Empty: <output_dir>/cache. "none" disables caching.
  std::string cache_dir;
  std::string output_dir = "out";
  std::uint64_t seed = 0;
  std::size_t parallel = 4;
  std::optional<double> nli_threshold;
  SweepSettings sweep;
  std::size_t fixture_docs = 10;
  std::size_t fixture_levels = 5;
};

nlohmann::ordered_json to_json(const RunConfig& config);

// Overlays the keys present in `j` onto `config`. Unknown keys and type
// mismatches throw ConfigError naming the field path.
void merge_json(RunConfig& config, const nlohmann::json& j);

RunConfig load_config_file(const std::filesystem::path& path);

enum class Command { kFixtures, kExtract, kJudge, kSweep, kReport };

// Checks everything a command needs before any file or network access.
// Throws ConfigError naming the offending field.
void validate(const RunConfig& config, Command command);

std::filesystem::path resolved_cache_dir(const RunConfig& config);

// Entry point shared by the executable and the tests. `args` excludes the
// program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace longeval::cli
