#pragma once
// Generation-parameter sampling, prompt rendering, and the inverse step of
// turning a completion back into labeled story records.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sstories/corpus.hpp"

namespace sstories {

struct SamplerConfig {
  double grammar_feature_prob = 0.5;
  double persona_prob = 0.33;
  // Stories per completion = max(1, round(k / paragraph_count)).
  int k = 24;
  std::string delimiter = "The End.";
  std::optional<std::vector<std::string>> name_list;

  void validate() const;
};

SamplerConfig sampler_config_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const SamplerConfig& cfg);

struct GenerationParams {
  std::string theme;
  std::string topic;
  std::string style;
  std::string narrative_feature;
  std::optional<std::string> grammar_feature;
  std::optional<std::string> author_persona;
  int paragraph_count = 1;
  int stories_per_completion = 1;
  std::string initial_pos;
  char initial_letter = 'a';
  std::string delimiter = "The End.";
  std::uint64_t seed = 0;

  bool operator==(const GenerationParams&) const = default;
};

int stories_for_paragraphs(int paragraph_count, int k = 24);

// Forces the presence of an optional slot instead of the coin flip. The
// flip is still drawn, so the other fields do not change.
struct SlotOverrides {
  std::optional<bool> grammar_feature;
  std::optional<bool> author_persona;
};

// Deterministic in (space, cfg, seed, overrides).
GenerationParams sample_params(const ParameterSpace& space, const SamplerConfig& cfg, std::uint64_t seed,
                               const SlotOverrides& overrides = {});

// The story-generation prompt. Sentences for an absent grammar feature or
// persona are left out; the name slot lists space.name_list.
std::string render_prompt(const GenerationParams& params, const ParameterSpace& space);

struct SplitResult {
  std::vector<std::string> stories;
  // The final segment had no closing delimiter.
  bool last_possibly_truncated = false;
};

// Splits on the delimiter (quotes normalized on both sides), trims, drops
// segments without a letter or digit. Quotes wrapped around a delimiter go
// with it.
SplitResult split_completion(const std::string& completion, const std::string& delimiter);

struct BatchInfo {
  std::string batch_id;
  std::string model;
  std::int64_t timestamp = 0;
  std::string language = "en";
};

// One record per text; ids are "<batch_id>-<index>". The last record is
// flagged when `last_possibly_truncated` is set.
std::vector<StoryRecord> attach_labels(const std::vector<std::string>& texts, const GenerationParams& params,
                                       const BatchInfo& batch, bool last_possibly_truncated = false);

}  // namespace sstories
