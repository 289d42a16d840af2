#include "longeval/semantic.hpp"

#include <cmath>
#include <nlohmann/json.hpp>
#include <set>

#include "longeval/errors.hpp"
#include "longeval/http_util.hpp"
#include "longeval/rouge.hpp"

namespace longeval {
namespace {

using nlohmann::json;

ProviderError invalid(const std::string& message) {
  return ProviderError(ProviderError::Kind::kValidation, message);
}

double read_number(const json& obj, const char* field) {
  auto it = obj.find(field);
  if (it == obj.end() || !it->is_number()) {
    throw invalid(std::string("response field \"") + field + "\" missing or not a number");
  }
  return it->get<double>();
}

const json& read_array(const json& obj, const char* field, std::size_t expected) {
  auto it = obj.find(field);
  if (it == obj.end() || !it->is_array()) {
    throw invalid(std::string("response field \"") + field + "\" missing or not an array");
  }
  if (it->size() != expected) {
    throw invalid(std::string("response field \"") + field + "\" has " + std::to_string(it->size()) +
                  " entries, expected " + std::to_string(expected));
  }
  for (const json& v : *it) {
    if (!v.is_number()) throw invalid(std::string("response field \"") + field + "\" has a non-number");
  }
  return *it;
}

json parse_response(const std::string& body) {
  try {
    json j = json::parse(body);
    if (!j.is_object()) throw invalid("response is not a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw invalid(std::string("response is not valid JSON: ") + e.what());
  }
}

std::set<std::string> unigram_set(std::string_view text) {
  auto tokens = rouge::tokenize(text);
  return {tokens.begin(), tokens.end()};
}

}  // namespace

void validate_recall(double recall) {
  if (!std::isfinite(recall) || recall < 0.0 || recall > 1.0) {
    throw invalid("recall " + std::to_string(recall) + " outside [0, 1]");
  }
}

void validate_nli(const NliProbs& p) {
  for (double v : {p.entail, p.contradict, p.neutral}) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      throw invalid("NLI probability " + std::to_string(v) + " outside [0, 1]");
    }
  }
  const double sum = p.entail + p.contradict + p.neutral;
  if (std::abs(sum - 1.0) > kSimplexTolerance) {
    throw invalid("NLI probabilities sum to " + std::to_string(sum) + ", not 1");
  }
}

double SemanticProvider::bertscore_recall(std::string_view candidate,
                                          std::string_view reference) const {
  const double r = do_bertscore_recall(candidate, reference);
  validate_recall(r);
  return r;
}

NliProbs SemanticProvider::nli(std::string_view premise, std::string_view hypothesis) const {
  const NliProbs p = do_nli(premise, hypothesis);
  validate_nli(p);
  return p;
}

std::vector<double> SemanticProvider::bertscore_recall_batch(std::span<const TextPair> pairs) const {
  std::vector<double> out = do_bertscore_recall_batch(pairs);
  if (out.size() != pairs.size()) throw invalid("batch recall size mismatch");
  for (double r : out) validate_recall(r);
  return out;
}

std::vector<NliProbs> SemanticProvider::nli_batch(std::span<const TextPair> pairs) const {
  std::vector<NliProbs> out = do_nli_batch(pairs);
  if (out.size() != pairs.size()) throw invalid("batch NLI size mismatch");
  for (const NliProbs& p : out) validate_nli(p);
  return out;
}

std::vector<double> SemanticProvider::do_bertscore_recall_batch(std::span<const TextPair> pairs) const {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const TextPair& p : pairs) out.push_back(do_bertscore_recall(p.first, p.second));
  return out;
}

std::vector<NliProbs> SemanticProvider::do_nli_batch(std::span<const TextPair> pairs) const {
  std::vector<NliProbs> out;
  out.reserve(pairs.size());
  for (const TextPair& p : pairs) out.push_back(do_nli(p.first, p.second));
  return out;
}

double MockSemanticProvider::do_bertscore_recall(std::string_view candidate,
                                                 std::string_view reference) const {
  const auto c = rouge::tokenize(candidate);
  const auto r = rouge::tokenize(reference);
  return rouge::recall(c, r, 1);
}

NliProbs MockSemanticProvider::do_nli(std::string_view premise, std::string_view hypothesis) const {
  const auto a = unigram_set(premise);
  const auto b = unigram_set(hypothesis);
  std::size_t shared = 0;
  for (const auto& w : a) shared += b.count(w);
  const std::size_t uni = a.size() + b.size() - shared;
  const double j = uni == 0 ? 0.0 : static_cast<double>(shared) / static_cast<double>(uni);
  return {j, 0.0, 1.0 - j};
}

HttpSemanticProvider::HttpSemanticProvider(HttpProviderConfig config)
    : config_(std::move(config)),
      in_flight_(static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, config_.max_parallel))) {
  if (config_.max_parallel < 1) throw ConfigError("provider max_parallel must be at least 1");
  http::parse_base_url(config_.endpoint);
}

std::size_t HttpSemanticProvider::requests_sent() const { return requests_.load(); }

std::string HttpSemanticProvider::post(const std::string& path, const std::string& body) const {
  const http::BaseUrl base = http::parse_base_url(config_.endpoint);
  http::RetryPolicy policy;
  policy.max_retries = config_.max_retries;
  policy.initial_backoff = config_.initial_backoff;
  try {
    return http::with_retries(policy, [&] {
      in_flight_.acquire();
      struct Release {
        std::counting_semaphore<>& s;
        ~Release() { s.release(); }
      } release{in_flight_};
      ++requests_;
      return http::post_json(base, path, body, {}, config_.timeout);
    });
  } catch (const TransportError& e) {
    throw ProviderError(ProviderError::Kind::kTransport, e.what());
  }
}

double HttpSemanticProvider::do_bertscore_recall(std::string_view candidate,
                                                 std::string_view reference) const {
  json req{{"candidate", candidate}, {"reference", reference}, {"idf", config_.idf}};
  return read_number(parse_response(post("/v1/bertscore_recall", req.dump())), "recall");
}

NliProbs HttpSemanticProvider::do_nli(std::string_view premise, std::string_view hypothesis) const {
  json req{{"premise", premise}, {"hypothesis", hypothesis}};
  const json res = parse_response(post("/v1/nli", req.dump()));
  return {read_number(res, "entail"), read_number(res, "contradict"), read_number(res, "neutral")};
}

std::vector<double> HttpSemanticProvider::do_bertscore_recall_batch(
    std::span<const TextPair> pairs) const {
  if (pairs.empty()) return {};
  json req{{"candidate", json::array()}, {"reference", json::array()}, {"idf", config_.idf}};
  for (const TextPair& p : pairs) {
    req["candidate"].push_back(p.first);
    req["reference"].push_back(p.second);
  }
  const json res = parse_response(post("/v1/bertscore_recall", req.dump()));
  return read_array(res, "recall", pairs.size()).get<std::vector<double>>();
}

std::vector<NliProbs> HttpSemanticProvider::do_nli_batch(std::span<const TextPair> pairs) const {
  if (pairs.empty()) return {};
  json req{{"premise", json::array()}, {"hypothesis", json::array()}};
  for (const TextPair& p : pairs) {
    req["premise"].push_back(p.first);
    req["hypothesis"].push_back(p.second);
  }
  const json res = parse_response(post("/v1/nli", req.dump()));
  const json& e = read_array(res, "entail", pairs.size());
  const json& c = read_array(res, "contradict", pairs.size());
  const json& n = read_array(res, "neutral", pairs.size());
  std::vector<NliProbs> out;
  out.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    out.push_back({e[i].get<double>(), c[i].get<double>(), n[i].get<double>()});
  }
  return out;
}

std::unique_ptr<SemanticProvider> make_provider(const ProviderSettings& settings) {
  if (settings.endpoint == "mock") return std::make_unique<MockSemanticProvider>(settings.max_parallel);
  HttpProviderConfig config;
  config.endpoint = settings.endpoint;
  config.timeout = settings.timeout;
  config.max_parallel = settings.max_parallel;
  config.idf = settings.idf;
  return std::make_unique<HttpSemanticProvider>(std::move(config));
}

}  // namespace longeval
