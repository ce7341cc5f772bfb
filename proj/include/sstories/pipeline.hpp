#pragma once
// End-to-end orchestration behind the command-line tool: the generation
// loop, the analysis report and report comparison.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sstories/corpus.hpp"
#include "sstories/lexical_metrics.hpp"
#include "sstories/llm_client.hpp"
#include "sstories/pos_tagger.hpp"
#include "sstories/post_process.hpp"
#include "sstories/prompt.hpp"

namespace sstories {

inline constexpr const char* kToolVersion = "0.1.0";

struct GenerateOptions {
  std::size_t count = 0;
  std::uint64_t seed = 0;
  ParameterSpace space = default_parameter_space();
  SamplerConfig sampler;
  llm::SamplingConfig sampling;
  std::int64_t timestamp = 0;
  // Spread the optional grammar/persona sentences evenly over batches
  // (see balanced_slots) instead of flipping an independent coin per batch.
  bool balanced_optional_slots = true;
  // Prompts sent per round; a round is processed in prompt order.
  std::size_t prompts_per_round = 8;
  // 0 picks a bound from count.
  std::size_t max_batches = 0;
  const pos::PosTagger* tagger = nullptr;
};

struct BatchRecord {
  std::string batch_id;
  GenerationParams params;
  std::size_t stories_split = 0;
  std::size_t stories_kept = 0;
  std::string finish_reason;
  int retry_count = 0;
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
};

struct GenerateResult {
  std::vector<StoryRecord> stories;
  std::vector<post::ValidationReport> reports;  // every split story, kept or not
  std::vector<std::pair<std::string, std::string>> duplicates;
  std::vector<BatchRecord> batches;  // batches whose completion was processed
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
  // Set when the backend failed; stories holds what was kept until then.
  std::optional<std::string> error;
};

// Presence of the optional prompt sentences for batch b. Each slot follows a
// randomly shifted additive recurrence (golden ratio for grammar, sqrt(2)
// for persona), so over B batches the share of batches with the sentence is
// within about log(B)/B of the configured probability. Every batch still has
// the configured marginal probability.
SlotOverrides balanced_slots(std::uint64_t seed, std::size_t batch, const SamplerConfig& cfg);

std::string batch_id_for(std::uint64_t seed, std::size_t batch);

// sample_params -> render_prompt -> complete -> split_completion ->
// attach_labels -> validate/dedup, until `count` stories are kept. Stories
// with a hard validation failure are dropped.
GenerateResult generate(llm::Client& client, const GenerateOptions& opts);

nlohmann::ordered_json validation_json(const GenerateResult& r);
nlohmann::ordered_json cost_json(const GenerateResult& r, const std::string& model, const llm::PriceTable& prices);

struct AnalyzeOptions {
  lexical::DiversityOptions lexical;
  // Fraction of the corpus analyzed (seeded by lexical.seed).
  double subsample = 1.0;
  bool syntactic = true;
  int template_n = 6;
  std::size_t template_k = 100;
  // n-gram frequency tables written for these n.
  std::vector<int> table_ns = {3, 4, 5};
  std::size_t table_rows = 20;
  std::size_t zipf_rows = 1000;
};

// Metric failures are recorded under "errors" and the rest still computed.
nlohmann::ordered_json analyze_corpus(const std::vector<std::string>& texts, const AnalyzeOptions& opts,
                                      const pos::PosTagger* tagger);

// Side-by-side comparison of two analysis reports, or of two judge score
// files. Throws InvalidInput when the settings differ.
nlohmann::ordered_json compare_reports(const nlohmann::json& a, const nlohmann::json& b, const std::string& name_a,
                                       const std::string& name_b);

// Plain-text rendering of an analysis report.
std::string render_report(const nlohmann::json& analysis);

}  // namespace sstories
