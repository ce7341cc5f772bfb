#pragma once
// Chat-completion client: request building, response parsing, retries with
// backoff, request-rate limiting and bounded concurrency, plus the backends
// it can talk to (HTTP, a scripted fake for tests, and a story mock).

#include <chrono>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace sstories::llm {

struct SamplingConfig {
  double top_p = 0.9;
  double temperature = 1.0;
  int max_tokens = 4096;
  std::string model_name = "gpt-4o-mini-2024-07-18";

  void validate() const;
};

enum class FinishReason { kStop, kLength, kContentFilter, kOther };
std::string_view to_string(FinishReason r);
FinishReason finish_reason_from_string(std::string_view s);

struct CompletionResult {
  std::string text;
  FinishReason finish_reason = FinishReason::kStop;
  std::optional<std::int64_t> prompt_tokens;
  std::optional<std::int64_t> completion_tokens;
  std::int64_t latency_ms = 0;
  int retry_count = 0;

  bool truncated() const { return finish_reason == FinishReason::kLength; }
};

std::string build_request_body(const std::string& prompt, const SamplingConfig& cfg);
// Takes the first choice. Throws ParseError on anything malformed.
CompletionResult parse_completion_response(const std::string& body);

struct HttpResponse {
  int status = 0;
  std::string body;
};

// Anything that can answer a chat-completions request body. Implementations
// must be safe to call from several threads at once. Network failures are
// reported by throwing TransportError.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual HttpResponse post(const std::string& request_body) = 0;
};

class HttpBackend : public Backend {
 public:
  // base_url like "https://api.openai.com/v1"; requests go to
  // <base_url>/chat/completions.
  HttpBackend(std::string base_url, std::string api_key, std::chrono::seconds timeout = std::chrono::seconds(120));
  HttpResponse post(const std::string& request_body) override;

 private:
  std::string scheme_host_port_;
  std::string path_;
  std::string api_key_;
  std::chrono::seconds timeout_;
};

// Replays queued responses in order and records each request body.
class ScriptedBackend : public Backend {
 public:
  void push(int status, std::string body);
  // A network failure for the next call.
  void push_transport_failure();
  HttpResponse post(const std::string& request_body) override;
  std::vector<std::string> requests() const;

 private:
  mutable std::mutex mu_;
  // status -1 marks a transport failure
  std::deque<HttpResponse> queue_;
  std::vector<std::string> requests_;
};

// Deterministic story generator keyed by a hash of the prompt. It reads the
// story count, paragraph count, delimiter, first letter, part of speech and
// name list out of the prompt and writes plain ASCII stories that honour
// them. Output longer than max_tokens is cut and reported as "length".
class MockBackend : public Backend {
 public:
  HttpResponse post(const std::string& request_body) override;
};

// Constraint slots the mock reads from a generation prompt.
struct PromptSlots {
  int story_count = 1;
  int paragraph_count = 1;
  std::string delimiter = "The End.";
  char initial_letter = 'a';
  std::string initial_pos = "noun";
  std::vector<std::string> names;
};
PromptSlots parse_prompt_slots(const std::string& prompt);
std::string mock_story_completion(const std::string& prompt);

// Rough token estimate used by the mock: four tokens per three words.
std::int64_t approx_token_count(const std::string& text);

std::uint64_t fnv1a64(std::string_view s);

struct RetryPolicy {
  int max_retries = 5;
  double base_delay_ms = 500.0;
  double max_delay_ms = 30000.0;
  // Each delay is scaled by a factor drawn uniformly from [1 - jitter, 1 + jitter].
  double jitter = 0.25;
  std::uint64_t jitter_seed = 0x5eed;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;
using Clock = std::function<std::chrono::steady_clock::time_point()>;

// Token bucket over requests per minute. Capacity is one minute's worth.
class RateLimiter {
 public:
  // requests_per_minute <= 0 disables limiting.
  RateLimiter(double requests_per_minute, Sleeper sleeper, Clock clock);
  void acquire();

 private:
  double rate_per_ms_;
  double capacity_;
  double tokens_;
  std::chrono::steady_clock::time_point last_;
  Sleeper sleeper_;
  Clock clock_;
  std::mutex mu_;
};

struct ClientConfig {
  RetryPolicy retry;
  double requests_per_minute = 0.0;
  int max_concurrency = 4;
};

ClientConfig client_config_from_json(const nlohmann::json& j);

class Client {
 public:
  Client(std::shared_ptr<Backend> backend, ClientConfig cfg = {}, Sleeper sleeper = {}, Clock clock = {});

  // Retries 429 and 5xx (and transport failures); fails at once on other
  // non-2xx answers.
  CompletionResult complete(const std::string& prompt, const SamplingConfig& cfg);

  // Runs up to max_concurrency requests at a time. Result i belongs to
  // prompt i. If any request fails, the failure of the lowest index is
  // rethrown after all workers stop.
  std::vector<CompletionResult> complete_all(const std::vector<std::string>& prompts, const SamplingConfig& cfg);

  // Delay before retry number `attempt` (1-based), jitter included.
  std::chrono::milliseconds backoff_delay(int attempt);

 private:
  std::shared_ptr<Backend> backend_;
  ClientConfig cfg_;
  Sleeper sleeper_;
  Clock clock_;
  RateLimiter limiter_;
  std::mutex jitter_mu_;
  std::uint64_t jitter_state_;
};

struct Price {
  double input_per_million = 0.0;
  double output_per_million = 0.0;
};
using PriceTable = std::map<std::string, Price>;

// Published list prices for the generator model, USD per 1M tokens.
PriceTable default_price_table();

// Rounded to 6 decimal places. Unknown model -> InvalidInput.
double estimate_cost(std::int64_t prompt_tokens, std::int64_t completion_tokens, const PriceTable& prices,
                     const std::string& model);

}  // namespace sstories::llm
