#include <doctest.h>

#include <atomic>
#include <thread>

#include "sstories/errors.hpp"
#include "sstories/llm_client.hpp"
#include "sstories/prompt.hpp"
#include "sstories/text.hpp"

using namespace sstories;
using namespace sstories::llm;

namespace {

std::string ok_body(const std::string& text, const std::string& finish = "stop") {
  nlohmann::json j;
  j["choices"] = nlohmann::json::array(
      {{{"index", 0}, {"message", {{"role", "assistant"}, {"content", text}}}, {"finish_reason", finish}}});
  j["usage"] = {{"prompt_tokens", 12}, {"completion_tokens", 34}};
  return j.dump();
}

// Records sleeps instead of sleeping; the fake clock advances by each sleep.
struct FakeTime {
  std::chrono::steady_clock::time_point now{};
  std::vector<std::int64_t> sleeps;
  Sleeper sleeper() {
    return [this](std::chrono::milliseconds d) {
      sleeps.push_back(d.count());
      now += d;
    };
  }
  Clock clock() {
    return [this] { return now; };
  }
};

ClientConfig no_jitter(int retries = 3) {
  ClientConfig c;
  c.retry.max_retries = retries;
  c.retry.base_delay_ms = 100;
  c.retry.max_delay_ms = 1000;
  c.retry.jitter = 0.0;
  c.max_concurrency = 1;
  return c;
}

}  // namespace

TEST_CASE("request body carries prompt and sampling settings") {
  SamplingConfig cfg;
  cfg.top_p = 0.8;
  cfg.temperature = 0.7;
  cfg.max_tokens = 100;
  cfg.model_name = "m1";
  const auto j = nlohmann::json::parse(build_request_body("hello \"there\"", cfg));
  CHECK(j["model"] == "m1");
  CHECK(j["messages"].size() == 1);
  CHECK(j["messages"][0]["role"] == "user");
  CHECK(j["messages"][0]["content"] == "hello \"there\"");
  CHECK(j["top_p"].get<double>() == doctest::Approx(0.8));
  CHECK(j["temperature"].get<double>() == doctest::Approx(0.7));
  CHECK(j["max_tokens"] == 100);
}

TEST_CASE("sampling config validation") {
  SamplingConfig c;
  CHECK_NOTHROW(c.validate());
  c.top_p = 0.0;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  c.top_p = 1.0;
  CHECK_NOTHROW(c.validate());
  c.top_p = 1.01;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  c = {};
  c.temperature = -0.1;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  c = {};
  c.max_tokens = 0;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  c = {};
  c.model_name = "";
  CHECK_THROWS_AS(build_request_body("x", c), InvalidInput);
}

TEST_CASE("response parsing") {
  const auto r = parse_completion_response(ok_body("Once upon a time.", "length"));
  CHECK(r.text == "Once upon a time.");
  CHECK(r.finish_reason == FinishReason::kLength);
  CHECK(r.truncated());
  CHECK(r.prompt_tokens == 12);
  CHECK(r.completion_tokens == 34);

  // usage is optional, unknown finish reasons map to other
  const auto s = parse_completion_response(
      R"({"choices":[{"message":{"content":"x"},"finish_reason":"tool_calls"}]})");
  CHECK(s.finish_reason == FinishReason::kOther);
  CHECK_FALSE(s.prompt_tokens.has_value());

  CHECK_THROWS_AS(parse_completion_response("not json"), ParseError);
  CHECK_THROWS_AS(parse_completion_response(R"({"choices":[]})"), ParseError);
  CHECK_THROWS_AS(parse_completion_response(R"({"choices":[{"message":{}}]})"), ParseError);
  CHECK_THROWS_AS(parse_completion_response(R"({"choices":[{"message":{"content":null}}]})"), ParseError);
  CHECK_THROWS_AS(parse_completion_response(R"([1,2])"), ParseError);
}

TEST_CASE("finish reason names round trip") {
  for (auto r : {FinishReason::kStop, FinishReason::kLength, FinishReason::kContentFilter}) {
    CHECK(finish_reason_from_string(to_string(r)) == r);
  }
}

TEST_CASE("retries 429 and 5xx then succeeds") {
  auto be = std::make_shared<ScriptedBackend>();
  be->push(429, "slow down");
  be->push(503, "unavailable");
  be->push_transport_failure();
  be->push(200, ok_body("done"));
  FakeTime t;
  Client c(be, no_jitter(3), t.sleeper(), t.clock());
  const auto r = c.complete("p", SamplingConfig{});
  CHECK(r.text == "done");
  CHECK(r.retry_count == 3);
  CHECK(be->requests().size() == 4);
  // base 100, doubling, no jitter
  CHECK(t.sleeps == std::vector<std::int64_t>{100, 200, 400});
}

TEST_CASE("gives up after max_retries") {
  auto be = std::make_shared<ScriptedBackend>();
  for (int i = 0; i < 5; ++i) be->push(500, "boom");
  FakeTime t;
  Client c(be, no_jitter(2), t.sleeper(), t.clock());
  CHECK_THROWS_AS(c.complete("p", SamplingConfig{}), TransportError);
  CHECK(be->requests().size() == 3);
}

TEST_CASE("4xx other than 429 fails at once") {
  auto be = std::make_shared<ScriptedBackend>();
  be->push(401, R"({"error":"bad key"})");
  be->push(200, ok_body("never"));
  FakeTime t;
  Client c(be, no_jitter(5), t.sleeper(), t.clock());
  try {
    c.complete("p", SamplingConfig{});
    FAIL("expected HttpError");
  } catch (const HttpError& e) {
    CHECK(e.status() == 401);
    CHECK(std::string(e.what()).find("bad key") != std::string::npos);
  }
  CHECK(be->requests().size() == 1);
  CHECK(t.sleeps.empty());
}

TEST_CASE("malformed 200 body is a parse error, not retried") {
  auto be = std::make_shared<ScriptedBackend>();
  be->push(200, "{}");
  FakeTime t;
  Client c(be, no_jitter(), t.sleeper(), t.clock());
  CHECK_THROWS_AS(c.complete("p", SamplingConfig{}), ParseError);
  CHECK(be->requests().size() == 1);
}

TEST_CASE("backoff is capped and jitter stays in band") {
  ClientConfig cfg = no_jitter();
  CHECK(Client(std::make_shared<ScriptedBackend>(), cfg).backoff_delay(1).count() == 100);
  Client c(std::make_shared<ScriptedBackend>(), cfg);
  CHECK(c.backoff_delay(4).count() == 800);
  CHECK(c.backoff_delay(5).count() == 1000);
  CHECK(c.backoff_delay(30).count() == 1000);

  cfg.retry.jitter = 0.25;
  Client j(std::make_shared<ScriptedBackend>(), cfg);
  bool varied = false;
  std::int64_t first = j.backoff_delay(3).count();
  for (int i = 0; i < 200; ++i) {
    const auto d = j.backoff_delay(3).count();
    CHECK(d >= 300);
    CHECK(d <= 500);
    varied = varied || d != first;
  }
  CHECK(varied);

  // Same seed, same sequence.
  Client a(std::make_shared<ScriptedBackend>(), cfg), b(std::make_shared<ScriptedBackend>(), cfg);
  for (int i = 1; i < 8; ++i) CHECK(a.backoff_delay(i) == b.backoff_delay(i));
}

TEST_CASE("rate limiter spaces requests once the bucket is empty") {
  FakeTime t;
  RateLimiter lim(60.0, t.sleeper(), t.clock());  // one per second, burst 60
  for (int i = 0; i < 60; ++i) lim.acquire();
  CHECK(t.sleeps.empty());
  lim.acquire();
  REQUIRE(t.sleeps.size() == 1);
  CHECK(t.sleeps[0] == 1000);
  lim.acquire();
  CHECK(t.sleeps.size() == 2);
  const auto before = t.now;
  t.now += std::chrono::seconds(5);
  for (int i = 0; i < 5; ++i) lim.acquire();
  CHECK(t.sleeps.size() == 2);
  CHECK(t.now - before == std::chrono::seconds(5));

  FakeTime off;
  RateLimiter none(0.0, off.sleeper(), off.clock());
  for (int i = 0; i < 1000; ++i) none.acquire();
  CHECK(off.sleeps.empty());
}

TEST_CASE("complete_all keeps prompt order under concurrency") {
  ClientConfig cfg;
  cfg.max_concurrency = 8;
  Client c(std::make_shared<MockBackend>(), cfg);
  std::vector<std::string> prompts;
  for (int i = 0; i < 40; ++i) {
    prompts.push_back("Write a short story (1 paragraphs) which only uses very simple words. "
                      "The story should have the following features: - Theme: t" +
                      std::to_string(i) +
                      "\nThe story should start with a noun that begins with the letter \"b\". "
                      "Write 1 stories. Separate each story with \"The End.\"");
  }
  const auto out = c.complete_all(prompts, SamplingConfig{});
  REQUIRE(out.size() == prompts.size());
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    CHECK(out[i].text == mock_story_completion(prompts[i]));
  }
}

TEST_CASE("complete_all surfaces a failure") {
  auto be = std::make_shared<ScriptedBackend>();
  be->push(200, ok_body("a"));
  be->push(400, "bad request");
  ClientConfig cfg = no_jitter(0);
  Client c(be, cfg);
  CHECK_THROWS_AS(c.complete_all({"a", "b", "c"}, SamplingConfig{}), HttpError);
}

TEST_CASE("client config from json") {
  const auto c = client_config_from_json(nlohmann::json::parse(
      R"({"requests_per_minute": 500, "max_concurrency": 2, "max_retries": 7,
          "retry_base_delay_ms": 10, "retry_max_delay_ms": 20})"));
  CHECK(c.requests_per_minute == 500);
  CHECK(c.max_concurrency == 2);
  CHECK(c.retry.max_retries == 7);
  CHECK(c.retry.base_delay_ms == 10);
  CHECK(c.retry.max_delay_ms == 20);
  CHECK_THROWS_AS(client_config_from_json(nlohmann::json::parse(R"({"max_concurrency": 0})")), InvalidInput);
  CHECK_THROWS_AS(client_config_from_json(nlohmann::json::parse(R"({"max_retries": "x"})")), InvalidInput);
}

TEST_CASE("http backend to a closed port is a transport error") {
  HttpBackend be("http://127.0.0.1:9", "", std::chrono::seconds(2));
  CHECK_THROWS_AS(be.post("{}"), TransportError);
  CHECK_THROWS_AS(HttpBackend("localhost:80", ""), InvalidInput);
}

TEST_CASE("mock backend reads the prompt slots and honours them") {
  GenerationParams p;
  p.theme = "Friendship";
  p.topic = "a lost kite";
  p.style = "Playful";
  p.narrative_feature = "Dialogue";
  p.paragraph_count = 3;
  p.initial_letter = 'm';
  p.initial_pos = "adjective";
  p.stories_per_completion = 4;
  auto space = default_parameter_space();
  space.name_list = {"Mia", "Leo"};
  const auto prompt = render_prompt(p, space);

  const auto slots = parse_prompt_slots(prompt);
  CHECK(slots.story_count == 4);
  CHECK(slots.paragraph_count == 3);
  CHECK(slots.initial_letter == 'm');
  CHECK(slots.initial_pos == "adjective");
  CHECK(slots.delimiter == p.delimiter);
  CHECK(slots.names == std::vector<std::string>{"Mia", "Leo"});

  const auto text = mock_story_completion(prompt);
  CHECK(text == mock_story_completion(prompt));
  const auto split = split_completion(text, p.delimiter);
  REQUIRE(split.stories.size() == 4);
  CHECK_FALSE(split.last_possibly_truncated);
  for (const auto& s : split.stories) {
    CHECK((s[0] == 'M' || s[0] == 'm'));
    CHECK(text::is_ascii_clean(s));
    // paragraphs are blank-line separated
    std::size_t paras = 1, pos = 0;
    while ((pos = s.find("\n\n", pos)) != std::string::npos) {
      ++paras;
      pos += 2;
    }
    CHECK(paras == 3);
  }

  MockBackend be;
  SamplingConfig cfg;
  const auto resp = be.post(build_request_body(prompt, cfg));
  CHECK(resp.status == 200);
  const auto r = parse_completion_response(resp.body);
  CHECK(r.text == text);
  CHECK(r.completion_tokens == approx_token_count(text));

  cfg.max_tokens = 20;
  const auto cut = parse_completion_response(be.post(build_request_body(prompt, cfg)).body);
  CHECK(cut.finish_reason == FinishReason::kLength);
  CHECK(cut.text.size() < text.size());
}

TEST_CASE("fnv1a known values") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("cost estimate") {
  const auto prices = default_price_table();
  CHECK(estimate_cost(1'000'000, 1'000'000, prices, "gpt-4o-mini") == doctest::Approx(0.75));
  CHECK(estimate_cost(1000, 500, prices, "gpt-4o-mini-2024-07-18") == doctest::Approx(0.00045));
  CHECK(estimate_cost(123, 456, prices, "mock") == 0.0);
  CHECK(estimate_cost(0, 0, prices, "gpt-4o-mini") == 0.0);
  CHECK_THROWS_AS(estimate_cost(1, 1, prices, "unknown-model"), InvalidInput);
  CHECK_THROWS_AS(estimate_cost(-1, 1, prices, "mock"), InvalidInput);
  // rounded to 6 places
  CHECK(estimate_cost(1, 0, prices, "gpt-4o-mini") == 0.0);
  CHECK(estimate_cost(7, 0, prices, "gpt-4o-mini") == doctest::Approx(0.000001));
}
