#pragma once

#include <array>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>

#include "longeval/judge.hpp"

namespace longeval {

// Content-addressed on-disk verdict store: one JSON file per key. Reads need
// no locking since writes land via rename; writers to the same key are
// serialized.
class VerdictCache {
 public:
  explicit VerdictCache(std::filesystem::path dir);

  std::optional<JudgeVerdict> get(const std::string& key) const;
  void put(const std::string& key, const JudgeVerdict& verdict);

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path path_for(const std::string& key) const;
  std::mutex& lock_for(const std::string& key);

  std::filesystem::path dir_;
  std::array<std::mutex, 32> locks_;
};

}  // namespace longeval
