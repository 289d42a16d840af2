#include <httplib.h>

#include <catch_amalgamated.hpp>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <thread>

#include "longeval/chat_client.hpp"
#include "longeval/errors.hpp"
#include "longeval/judge.hpp"
#include "longeval/prompts.hpp"
#include "longeval/verdict_cache.hpp"
#include "test_util.hpp"

using namespace longeval;
using nlohmann::json;

namespace {

const WhitespaceCounter kWs;

std::string golden(CriterionKind k) {
  std::ifstream in(std::string(LONGEVAL_GOLDEN_DIR) + "/" + std::string(to_string(k)) + ".txt",
                   std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string replace_once(std::string s, std::string_view from, std::string_view to) {
  s.replace(s.find(from), from.size(), to);
  return s;
}

std::string many_words(std::size_t n, const std::string& word = "lorem") {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) s += ' ';
    s += word;
  }
  return s;
}

class FixedChoicesClient final : public ChatClient {
 public:
  explicit FixedChoicesClient(std::vector<std::string> choices) : choices_(std::move(choices)) {}
  ChatResponse complete(const ChatRequest&) override { return {choices_}; }

 private:
  std::vector<std::string> choices_;
};

GeneratedSummary summary_of(const std::string& text) { return {"sys", text, {}}; }

}  // namespace

TEST_CASE("templates match the golden transcriptions byte for byte") {
  for (CriterionKind k : kAllCriteria) {
    const std::string g = golden(k);
    REQUIRE_FALSE(g.empty());
    CHECK(criterion(k).prompt_template == g);
    CHECK_NOTHROW(validate_template(criterion(k).prompt_template));
    CHECK(render_prompt(criterion(k).prompt_template, "ART TEXT", "SUM TEXT") ==
          replace_once(replace_once(g, "{{article}}", "ART TEXT"), "{{summary}}", "SUM TEXT"));
    CHECK(std::string_view(g).ends_with("# Evaluation Form (scores ONLY):"));
  }
}

TEST_CASE("criterion scales") {
  for (CriterionKind k : {CriterionKind::kConsistency, CriterionKind::kRelevance}) {
    CHECK(criterion(k).scale.min == 1);
    CHECK(criterion(k).scale.max == 5);
  }
  CHECK(criterion(CriterionKind::kFaithfulness).scale.min == 1);
  CHECK(criterion(CriterionKind::kFaithfulness).scale.max == 7);
}

TEST_CASE("template validation") {
  CHECK_NOTHROW(validate_template("{{article}} {{summary}}\n# Evaluation Form (scores ONLY):"));
  CHECK_THROWS_AS(validate_template("{{summary}}\n# Evaluation Form (scores ONLY):"), ConfigError);
  CHECK_THROWS_AS(validate_template("{{article}}{{article}}{{summary}}# Evaluation Form (scores ONLY):"),
                  ConfigError);
  CHECK_THROWS_AS(validate_template("{{article}} {{summary}}"), ConfigError);
}

TEST_CASE("substitution is single pass") {
  const std::string out = render_prompt("A={{article}} S={{summary}}", "{{summary}}", "x");
  CHECK(out == "A={{summary}} S=x");
}

TEST_CASE("score parsing") {
  const Criterion& five = criterion(CriterionKind::kConsistency);
  const Criterion& seven = criterion(CriterionKind::kFaithfulness);
  CHECK(parse_score("4", five) == 4);
  CHECK(parse_score("Score: 5", five) == 5);
  CHECK(parse_score(" 3\n", five, true) == 3);
  CHECK(parse_score("7", seven) == 7);
  CHECK_THROWS_AS(parse_score("Score: 5", five, true), JudgeError);
  CHECK_THROWS_AS(parse_score("no digits", five), JudgeError);
  CHECK_THROWS_AS(parse_score("-2", five), JudgeError);
  CHECK_THROWS_AS(parse_score("99999999999999999999", five), JudgeError);
  try {
    parse_score("8", five);
    FAIL("expected JudgeError");
  } catch (const JudgeError& e) {
    CHECK(e.raw_response() == "8");
  }
}

TEST_CASE("cost is input tokens at the per-1k rate") {
  const JudgeConfig cfg;
  CHECK(cost_of(5000, cfg) == 0.15);
  CHECK(cost_of(1000, cfg) == 0.03);
  CHECK(cost_of(0, cfg) == 0.0);
}

TEST_CASE("config validation") {
  JudgeConfig c;
  CHECK_NOTHROW(c.validate());
  c.context_limit = 16;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.n = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.temperature = -1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("long articles are truncated and the summary survives") {
  JudgeConfig cfg;
  const std::string article = many_words(10000);
  const std::string summary = "the summary stays whole and exact";
  for (CriterionKind k : kAllCriteria) {
    const auto p = assemble_prompt(article, summary, criterion(k), cfg, kWs);
    CHECK(p.article_truncated);
    CHECK(p.tokens <= cfg.context_limit - cfg.completion_reserve);
    CHECK(p.tokens == kWs.count(p.text));
    CHECK(p.text.find("# Generated Summary:\n" + summary + "\n\n# Evaluation Form") !=
          std::string::npos);
  }
  const auto short_prompt =
      assemble_prompt("tiny", summary, criterion(CriterionKind::kRelevance), cfg, kWs);
  CHECK_FALSE(short_prompt.article_truncated);
}

TEST_CASE("empty article still renders") {
  const auto p = assemble_prompt("", "s", criterion(CriterionKind::kRelevance), JudgeConfig{}, kWs);
  CHECK(p.text.find("# Source Article:\n\n\n# Generated Summary:") != std::string::npos);
}

TEST_CASE("summary alone over the limit is an error") {
  JudgeConfig cfg;
  cfg.context_limit = 600;
  CHECK_THROWS_AS(
      assemble_prompt("a", many_words(700), criterion(CriterionKind::kConsistency), cfg, kWs),
      JudgeError);
}

TEST_CASE("judge sends the configured request and parses the reply") {
  ChatRequest seen;
  CallbackChatClient client([&](const ChatRequest& r) {
    seen = r;
    return std::string("4");
  });
  Judge judge(JudgeConfig{}, client, kWs);
  const auto v = judge.judge(std::string_view("An article."), summary_of("A summary."),
                             CriterionKind::kConsistency);
  CHECK(v.score == 4);
  CHECK(v.samples == std::vector<int>{4});
  CHECK_FALSE(v.cached);
  CHECK(seen.model == "gpt-4-0613");
  CHECK(seen.temperature == 0.0);
  CHECK(seen.n == 1);
  CHECK(seen.max_tokens == 16);
  CHECK(v.prompt_tokens == kWs.count(seen.prompt));
  CHECK(v.cost == cost_of(v.prompt_tokens, judge.config()));
  CHECK(judge.spent() == v.cost);
  CHECK(judge.api_calls() == 1);
}

TEST_CASE("out-of-scale replies fail the verdict") {
  CallbackChatClient client([](const ChatRequest&) { return std::string("8"); });
  Judge judge(JudgeConfig{}, client, kWs);
  CHECK_THROWS_AS(judge.judge(std::string_view("a"), summary_of("s"), CriterionKind::kRelevance),
                  JudgeError);
}

TEST_CASE("multiple samples are averaged") {
  FixedChoicesClient client({"3", "4", "3"});
  JudgeConfig cfg;
  cfg.n = 3;
  Judge judge(cfg, client, kWs);
  const auto v = judge.judge(std::string_view("a"), summary_of("s"), CriterionKind::kConsistency);
  CHECK(v.samples == std::vector<int>{3, 4, 3});
  CHECK(v.value() == Catch::Approx(10.0 / 3.0));
  CHECK(v.score == 3);
}

TEST_CASE("warm cache makes no calls") {
  const auto dir = longeval::testing::temp_dir("judge-cache");
  VerdictCache cache(dir);
  CallbackChatClient client([](const ChatRequest&) { return std::string("5"); });
  {
    Judge judge(JudgeConfig{}, client, kWs, &cache);
    judge.judge(std::string_view("article"), summary_of("summary"), CriterionKind::kConsistency);
  }
  REQUIRE(client.calls() == 1);

  Judge judge(JudgeConfig{}, client, kWs, &cache);
  const auto v =
      judge.judge(std::string_view("article"), summary_of("summary"), CriterionKind::kConsistency);
  CHECK(v.cached);
  CHECK(v.score == 5);
  CHECK(judge.api_calls() == 0);
  CHECK(judge.spent() == 0.0);
  CHECK(client.calls() == 1);

  // A different model is a different key.
  JudgeConfig other;
  other.model = "another-model";
  Judge judge2(other, client, kWs, &cache);
  CHECK_FALSE(judge2.judge(std::string_view("article"), summary_of("summary"),
                           CriterionKind::kConsistency)
                  .cached);
  CHECK(client.calls() == 2);
}

TEST_CASE("corrupt cache entries are misses") {
  const auto dir = longeval::testing::temp_dir("judge-cache-corrupt");
  VerdictCache cache(dir);
  {
    std::ofstream(dir / "abc.json") << "{not json";
  }
  CHECK_FALSE(cache.get("abc"));
}

TEST_CASE("spend cap refuses further dispatch") {
  CallbackChatClient client([](const ChatRequest&) { return std::string("3"); });
  JudgeConfig cfg;
  Judge probe(cfg, client, kWs);
  const double one = cost_of(probe.prepare("a", "s", CriterionKind::kConsistency).prompt.tokens, cfg);
  cfg.max_spend = one * 1.5;
  Judge judge(cfg, client, kWs);
  judge.judge(std::string_view("a"), summary_of("s"), CriterionKind::kConsistency);
  CHECK_THROWS_AS(judge.judge(std::string_view("b"), summary_of("s"), CriterionKind::kConsistency),
                  JudgeError);
  CHECK(judge.api_calls() == 1);
}

TEST_CASE("proxy judge scores corruption on the prompt's scale") {
  ProxyJudgeClient proxy;
  Judge judge(JudgeConfig{}, proxy, kWs);
  CHECK(judge.judge(std::string_view("doc"), summary_of("clean words only here"),
                    CriterionKind::kRelevance)
            .score == 5);
  CHECK(judge.judge(std::string_view("doc"), summary_of("<oov> words <oov> here"),
                    CriterionKind::kRelevance)
            .score == 1);
  CHECK(judge.judge(std::string_view("doc"), summary_of("clean words only here"),
                    CriterionKind::kFaithfulness)
            .score == 7);
  // The article is ignored even if it contains the marker.
  CHECK(judge.judge(std::string_view("<oov> <oov>"), summary_of("clean"), CriterionKind::kRelevance)
            .score == 5);
}

TEST_CASE("noisy proxy judge is reproducible per seed") {
  auto run = [](std::uint64_t seed) {
    ProxyJudgeClient proxy(0.5, seed);
    Judge judge(JudgeConfig{}, proxy, kWs);
    std::vector<int> scores;
    for (int i = 0; i < 40; ++i) {
      scores.push_back(judge
                           .judge(std::string_view("doc " + std::to_string(i)),
                                  summary_of("some summary text"), CriterionKind::kConsistency)
                           .score);
    }
    return scores;
  };
  CHECK(run(1) == run(1));
  CHECK(run(1) != run(2));
  const auto s = run(1);
  CHECK(std::any_of(s.begin(), s.end(), [](int x) { return x != 5; }));
  CHECK(std::all_of(s.begin(), s.end(), [](int x) { return x >= 4 && x <= 5; }));
}

TEST_CASE("chat wire format") {
  ChatRequest r{"m", "hello", 0.0, 2, 16};
  const json body = json::parse(chat_request_body(r));
  CHECK(body["model"] == "m");
  CHECK(body["messages"] == json::array({{{"role", "user"}, {"content", "hello"}}}));
  CHECK(body["n"] == 2);
  CHECK(body["max_tokens"] == 16);
  CHECK(body["temperature"] == 0.0);

  const auto resp = parse_chat_response(
      R"({"choices":[{"message":{"role":"assistant","content":"4"}},{"message":{"content":"5"}}]})");
  CHECK(resp.contents == std::vector<std::string>{"4", "5"});
  CHECK_THROWS_AS(parse_chat_response(R"({"choices":[]})"), JudgeError);
  CHECK_THROWS_AS(parse_chat_response("oops"), JudgeError);
}

TEST_CASE("openai client posts with bearer auth and retries rate limits") {
  httplib::Server server;
  std::atomic<int> hits{0};
  std::string auth;
  json last;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    if (++hits == 1) {
      res.status = 429;
      return;
    }
    auth = req.get_header_value("Authorization");
    last = json::parse(req.body);
    res.set_content(R"({"choices":[{"message":{"content":"Score: 2"}}]})", "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  OpenAIClientConfig cfg;
  cfg.base_url = "http://127.0.0.1:" + std::to_string(port);
  cfg.api_key = "sk-test";
  cfg.retry.initial_backoff = std::chrono::milliseconds(1);
  OpenAIChatClient client(cfg);
  Judge judge(JudgeConfig{}, client, kWs);
  const auto v = judge.judge(std::string_view("a"), summary_of("s"), CriterionKind::kConsistency);
  server.stop();
  t.join();

  CHECK(v.score == 2);
  CHECK(hits == 2);
  CHECK(auth == "Bearer sk-test");
  CHECK(last["model"] == "gpt-4-0613");
  CHECK(last["messages"][0]["content"].get<std::string>().ends_with("# Evaluation Form (scores ONLY):"));
}

TEST_CASE("openai client needs a key") {
  OpenAIClientConfig cfg;
  CHECK_THROWS_AS(OpenAIChatClient(cfg), ConfigError);
}
