#include "sstories/llm_client.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

#include <httplib.h>

#include "sstories/errors.hpp"
#include "sstories/rng.hpp"

namespace sstories::llm {

namespace {

std::string excerpt(const std::string& body) {
  constexpr std::size_t kMax = 300;
  return body.size() <= kMax ? body : body.substr(0, kMax) + "...";
}

void default_sleep(std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }
std::chrono::steady_clock::time_point default_now() { return std::chrono::steady_clock::now(); }

}  // namespace

void SamplingConfig::validate() const {
  if (!(top_p > 0.0 && top_p <= 1.0)) throw InvalidInput("top_p must lie in (0, 1]");
  if (!(temperature >= 0.0)) throw InvalidInput("temperature must be non-negative");
  if (max_tokens < 1) throw InvalidInput("max_tokens must be positive");
  if (model_name.empty()) throw InvalidInput("model name is empty");
}

std::string_view to_string(FinishReason r) {
  switch (r) {
    case FinishReason::kStop:
      return "stop";
    case FinishReason::kLength:
      return "length";
    case FinishReason::kContentFilter:
      return "content_filter";
    case FinishReason::kOther:
      return "other";
  }
  return "other";
}

FinishReason finish_reason_from_string(std::string_view s) {
  if (s == "stop") return FinishReason::kStop;
  if (s == "length") return FinishReason::kLength;
  if (s == "content_filter") return FinishReason::kContentFilter;
  return FinishReason::kOther;
}

std::string build_request_body(const std::string& prompt, const SamplingConfig& cfg) {
  cfg.validate();
  nlohmann::ordered_json j;
  j["model"] = cfg.model_name;
  j["messages"] = nlohmann::ordered_json::array({{{"role", "user"}, {"content", prompt}}});
  j["top_p"] = cfg.top_p;
  j["temperature"] = cfg.temperature;
  j["max_tokens"] = cfg.max_tokens;
  return j.dump();
}

CompletionResult parse_completion_response(const std::string& body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("completion response is not JSON: " + excerpt(body));
  }
  if (!j.is_object() || !j.contains("choices") || !j["choices"].is_array() || j["choices"].empty()) {
    throw ParseError("completion response has no choices: " + excerpt(body));
  }
  const auto& choice = j["choices"][0];
  if (!choice.is_object() || !choice.contains("message") || !choice["message"].is_object()) {
    throw ParseError("first choice has no message");
  }
  const auto& content = choice["message"].value("content", nlohmann::json());
  if (!content.is_string()) throw ParseError("first choice has no text content");
  CompletionResult r;
  r.text = content.get<std::string>();
  const auto fr = choice.value("finish_reason", nlohmann::json());
  r.finish_reason = fr.is_string() ? finish_reason_from_string(fr.get<std::string>()) : FinishReason::kOther;
  if (j.contains("usage") && j["usage"].is_object()) {
    const auto& u = j["usage"];
    if (u.contains("prompt_tokens") && u["prompt_tokens"].is_number_integer()) {
      r.prompt_tokens = u["prompt_tokens"].get<std::int64_t>();
    }
    if (u.contains("completion_tokens") && u["completion_tokens"].is_number_integer()) {
      r.completion_tokens = u["completion_tokens"].get<std::int64_t>();
    }
  }
  return r;
}

HttpBackend::HttpBackend(std::string base_url, std::string api_key, std::chrono::seconds timeout)
    : api_key_(std::move(api_key)), timeout_(timeout) {
  const auto scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos) throw InvalidInput("base_url needs a scheme: " + base_url);
  const auto path_start = base_url.find('/', scheme_end + 3);
  scheme_host_port_ = base_url.substr(0, path_start);
  std::string prefix = path_start == std::string::npos ? "" : base_url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  path_ = prefix + "/chat/completions";
}

HttpResponse HttpBackend::post(const std::string& request_body) {
  httplib::Client cli(scheme_host_port_);
  cli.set_connection_timeout(timeout_);
  cli.set_read_timeout(timeout_);
  cli.set_write_timeout(timeout_);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
  auto res = cli.Post(path_, headers, request_body, "application/json");
  if (!res) throw TransportError("request to " + scheme_host_port_ + path_ + " failed: " + httplib::to_string(res.error()));
  return {res->status, res->body};
}

void ScriptedBackend::push(int status, std::string body) {
  std::lock_guard lock(mu_);
  queue_.push_back(HttpResponse{status, std::move(body)});
}

void ScriptedBackend::push_transport_failure() {
  std::lock_guard lock(mu_);
  queue_.push_back(HttpResponse{-1, {}});
}

HttpResponse ScriptedBackend::post(const std::string& request_body) {
  std::lock_guard lock(mu_);
  requests_.push_back(request_body);
  if (queue_.empty()) throw TransportError("scripted backend has no response left");
  auto next = std::move(queue_.front());
  queue_.pop_front();
  if (next.status < 0) throw TransportError("scripted transport failure");
  return next;
}

std::vector<std::string> ScriptedBackend::requests() const {
  std::lock_guard lock(mu_);
  return requests_;
}

RateLimiter::RateLimiter(double requests_per_minute, Sleeper sleeper, Clock clock)
    : rate_per_ms_(requests_per_minute > 0 ? requests_per_minute / 60000.0 : 0.0),
      capacity_(std::max(1.0, requests_per_minute)),
      tokens_(capacity_),
      sleeper_(std::move(sleeper)),
      clock_(std::move(clock)) {
  last_ = clock_();
}

void RateLimiter::acquire() {
  if (rate_per_ms_ <= 0.0) return;
  std::lock_guard lock(mu_);
  for (;;) {
    const auto now = clock_();
    const double elapsed = std::chrono::duration<double, std::milli>(now - last_).count();
    last_ = now;
    tokens_ = std::min(capacity_, tokens_ + elapsed * rate_per_ms_);
    if (tokens_ >= 1.0) {
      tokens_ -= 1.0;
      return;
    }
    const double wait = (1.0 - tokens_) / rate_per_ms_;
    sleeper_(std::chrono::milliseconds(static_cast<std::int64_t>(std::ceil(wait))));
  }
}

ClientConfig client_config_from_json(const nlohmann::json& j) {
  ClientConfig c;
  try {
    c.requests_per_minute = j.value("requests_per_minute", c.requests_per_minute);
    c.max_concurrency = j.value("max_concurrency", c.max_concurrency);
    c.retry.max_retries = j.value("max_retries", c.retry.max_retries);
    c.retry.base_delay_ms = j.value("retry_base_delay_ms", c.retry.base_delay_ms);
    c.retry.max_delay_ms = j.value("retry_max_delay_ms", c.retry.max_delay_ms);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("client config: ") + e.what());
  }
  if (c.max_concurrency < 1) throw InvalidInput("max_concurrency must be positive");
  if (c.retry.max_retries < 0) throw InvalidInput("max_retries must be non-negative");
  return c;
}

Client::Client(std::shared_ptr<Backend> backend, ClientConfig cfg, Sleeper sleeper, Clock clock)
    : backend_(std::move(backend)),
      cfg_(cfg),
      sleeper_(sleeper ? std::move(sleeper) : Sleeper(default_sleep)),
      clock_(clock ? std::move(clock) : Clock(default_now)),
      limiter_(cfg.requests_per_minute, sleeper_, clock_),
      jitter_state_(cfg.retry.jitter_seed) {
  if (!backend_) throw InvalidInput("client needs a backend");
  if (cfg_.max_concurrency < 1) throw InvalidInput("max_concurrency must be positive");
}

std::chrono::milliseconds Client::backoff_delay(int attempt) {
  const auto& r = cfg_.retry;
  double d = std::min(r.max_delay_ms, r.base_delay_ms * std::pow(2.0, attempt - 1));
  double u;
  {
    std::lock_guard lock(jitter_mu_);
    jitter_state_ = splitmix64(jitter_state_);
    u = static_cast<double>(jitter_state_ >> 11) * 0x1.0p-53;
  }
  d *= 1.0 - r.jitter + 2.0 * r.jitter * u;
  return std::chrono::milliseconds(static_cast<std::int64_t>(std::llround(std::max(0.0, d))));
}

CompletionResult Client::complete(const std::string& prompt, const SamplingConfig& cfg) {
  const auto body = build_request_body(prompt, cfg);
  for (int attempt = 0;; ++attempt) {
    limiter_.acquire();
    const auto start = clock_();
    std::string why;
    try {
      const auto resp = backend_->post(body);
      if (resp.status >= 200 && resp.status < 300) {
        auto result = parse_completion_response(resp.body);
        result.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(clock_() - start).count();
        result.retry_count = attempt;
        return result;
      }
      if (resp.status != 429 && resp.status < 500) throw HttpError(resp.status, excerpt(resp.body));
      why = "HTTP " + std::to_string(resp.status) + ": " + excerpt(resp.body);
    } catch (const TransportError& e) {
      why = e.what();
    }
    if (attempt >= cfg_.retry.max_retries) {
      throw TransportError("giving up after " + std::to_string(attempt) + " retries; last error: " + why);
    }
    sleeper_(backoff_delay(attempt + 1));
  }
}

std::vector<CompletionResult> Client::complete_all(const std::vector<std::string>& prompts,
                                                   const SamplingConfig& cfg) {
  const auto n = prompts.size();
  std::vector<std::optional<CompletionResult>> results(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  auto worker = [&] {
    for (;;) {
      if (failed.load()) return;
      const auto i = next.fetch_add(1);
      if (i >= n) return;
      try {
        results[i] = complete(prompts[i], cfg);
      } catch (...) {
        errors[i] = std::current_exception();
        failed.store(true);
      }
    }
  };
  const auto threads = std::min<std::size_t>(static_cast<std::size_t>(cfg_.max_concurrency), n);
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<CompletionResult> out;
  out.reserve(n);
  for (auto& r : results) out.push_back(std::move(*r));
  return out;
}

PriceTable default_price_table() {
  return {{"gpt-4o-mini-2024-07-18", {0.15, 0.60}}, {"gpt-4o-mini", {0.15, 0.60}}, {"mock", {0.0, 0.0}}};
}

double estimate_cost(std::int64_t prompt_tokens, std::int64_t completion_tokens, const PriceTable& prices,
                     const std::string& model) {
  if (prompt_tokens < 0 || completion_tokens < 0) throw InvalidInput("token counts must be non-negative");
  const auto it = prices.find(model);
  if (it == prices.end()) throw InvalidInput("no price known for model " + model);
  const auto& p = it->second;
  if (p.input_per_million < 0 || p.output_per_million < 0) throw InvalidInput("prices must be non-negative");
  const double cost = (static_cast<double>(prompt_tokens) * p.input_per_million +
                       static_cast<double>(completion_tokens) * p.output_per_million) /
                      1e6;
  return std::round(cost * 1e6) / 1e6;
}

}  // namespace sstories::llm
