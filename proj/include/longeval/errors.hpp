#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace longeval {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed corpus input. `line()` is 1-based, 0 when not tied to a line.
class CorpusError : public Error {
 public:
  CorpusError(const std::string& message, std::size_t line = 0)
      : Error(line == 0 ? message : "line " + std::to_string(line) + ": " + message),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class TokenizerError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Raised by semantic providers. Validation failures are never retried.
class ProviderError : public Error {
 public:
  enum class Kind { kTransport, kValidation };

  ProviderError(Kind kind, const std::string& message) : Error(message), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

// A provider failure while scoring a specific source sentence.
class ScoringError : public Error {
 public:
  ScoringError(std::size_t sentence_index, const std::string& message)
      : Error("sentence " + std::to_string(sentence_index) + ": " + message),
        sentence_index_(sentence_index) {}

  std::size_t sentence_index() const noexcept { return sentence_index_; }

 private:
  std::size_t sentence_index_;
};

class TransportError : public Error {
 public:
  TransportError(const std::string& message, int status = 0, bool retryable = true)
      : Error(message), status_(status), retryable_(retryable) {}

  int status() const noexcept { return status_; }
  bool retryable() const noexcept { return retryable_; }

 private:
  int status_;
  bool retryable_;
};

// Judge failures keep the model's raw output for diagnosis.
class JudgeError : public Error {
 public:
  JudgeError(const std::string& message, std::string raw_response = {})
      : Error(message), raw_response_(std::move(raw_response)) {}

  const std::string& raw_response() const noexcept { return raw_response_; }

 private:
  std::string raw_response_;
};

class StatsError : public Error {
 public:
  using Error::Error;
};

}  // namespace longeval
