#include "longeval/verdict_cache.hpp"

#include <fstream>
#include <functional>
#include <nlohmann/json.hpp>
#include <sstream>
#include <thread>

#include "longeval/errors.hpp"

namespace longeval {

using nlohmann::json;

VerdictCache::VerdictCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::filesystem::path VerdictCache::path_for(const std::string& key) const {
  return dir_ / (key + ".json");
}

std::mutex& VerdictCache::lock_for(const std::string& key) {
  return locks_[std::hash<std::string>{}(key) % locks_.size()];
}

std::optional<JudgeVerdict> VerdictCache::get(const std::string& key) const {
  std::ifstream in(path_for(key));
  if (!in) return std::nullopt;
  try {
    const json j = json::parse(in);
    JudgeVerdict v;
    v.score = j.at("score").get<int>();
    v.samples = j.at("samples").get<std::vector<int>>();
    v.criterion = parse_criterion(j.at("criterion").get<std::string>()).value();
    v.prompt_tokens = j.at("prompt_tokens").get<std::size_t>();
    v.cost = j.at("cost").get<double>();
    v.raw_response = j.at("raw_response").get<std::string>();
    v.prompt_hash = j.at("prompt_hash").get<std::string>();
    v.cached = true;
    return v;
  } catch (const std::exception&) {
    // A torn or foreign file is treated as a miss and overwritten later.
    return std::nullopt;
  }
}

void VerdictCache::put(const std::string& key, const JudgeVerdict& verdict) {
  json j;
  j["score"] = verdict.score;
  j["samples"] = verdict.samples;
  j["criterion"] = std::string(to_string(verdict.criterion));
  j["prompt_tokens"] = verdict.prompt_tokens;
  j["cost"] = verdict.cost;
  j["raw_response"] = verdict.raw_response;
  j["prompt_hash"] = verdict.prompt_hash;

  std::lock_guard lock(lock_for(key));
  std::ostringstream tid;
  tid << std::this_thread::get_id();
  const std::filesystem::path final_path = path_for(key);
  std::filesystem::path tmp = final_path;
  tmp += ".tmp." + tid.str();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write cache file " + tmp.string());
    out << j.dump();
  }
  std::filesystem::rename(tmp, final_path);
}

}  // namespace longeval
