#include "sstories/prompt.hpp"

#include <cmath>
#include <cstdio>

#include "sstories/errors.hpp"
#include "sstories/post_process.hpp"
#include "sstories/rng.hpp"
#include "sstories/text.hpp"

namespace sstories {

namespace {

const std::string& pick(Rng& rng, const std::vector<std::string>& options, const char* what) {
  if (options.empty()) throw InvalidInput(std::string("cannot sample from empty ") + what + " list");
  return options[uniform_index(rng, options.size())];
}

std::string with_article(const std::string& pos) {
  const bool vowel = !pos.empty() && std::string("aeiou").find(pos[0]) != std::string::npos;
  return (vowel ? "an " : "a ") + pos;
}

std::string join(const std::vector<std::string>& items, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

}  // namespace

void SamplerConfig::validate() const {
  if (!(grammar_feature_prob >= 0.0 && grammar_feature_prob <= 1.0)) {
    throw InvalidInput("grammar_feature_prob must lie in [0, 1]");
  }
  if (!(persona_prob >= 0.0 && persona_prob <= 1.0)) throw InvalidInput("persona_prob must lie in [0, 1]");
  if (k < 1) throw InvalidInput("K must be positive");
  if (delimiter.empty()) throw InvalidInput("delimiter must not be empty");
  if (name_list && name_list->empty()) throw InvalidInput("name_list override is empty");
}

SamplerConfig sampler_config_from_json(const nlohmann::json& j) {
  SamplerConfig c;
  try {
    c.grammar_feature_prob = j.value("grammar_feature_prob", c.grammar_feature_prob);
    c.persona_prob = j.value("persona_prob", c.persona_prob);
    c.k = j.value("K", j.value("k", c.k));
    c.delimiter = j.value("delimiter", c.delimiter);
    if (j.contains("name_list")) c.name_list = j.at("name_list").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("sampler config: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::ordered_json to_json(const SamplerConfig& cfg) {
  nlohmann::ordered_json j;
  j["grammar_feature_prob"] = cfg.grammar_feature_prob;
  j["persona_prob"] = cfg.persona_prob;
  j["K"] = cfg.k;
  j["delimiter"] = cfg.delimiter;
  if (cfg.name_list) j["name_list"] = *cfg.name_list;
  return j;
}

int stories_for_paragraphs(int paragraph_count, int k) {
  if (paragraph_count < 1 || k < 1) throw InvalidInput("paragraph count and K must be positive");
  const long r = std::lround(static_cast<double>(k) / static_cast<double>(paragraph_count));
  return static_cast<int>(std::max(1L, r));
}

GenerationParams sample_params(const ParameterSpace& space, const SamplerConfig& cfg, std::uint64_t seed,
                               const SlotOverrides& overrides) {
  cfg.validate();
  Rng rng(seed);
  GenerationParams p;
  p.seed = seed;
  p.theme = pick(rng, space.themes, "theme");
  p.topic = pick(rng, space.topics, "topic");
  p.style = pick(rng, space.styles, "style");
  p.narrative_feature = pick(rng, space.narrative_features, "narrative feature");
  const bool grammar = bernoulli(rng, cfg.grammar_feature_prob);
  const auto& grammar_option = pick(rng, space.grammar_features, "grammar feature");
  if (overrides.grammar_feature.value_or(grammar)) p.grammar_feature = grammar_option;
  const bool persona = bernoulli(rng, cfg.persona_prob);
  const auto& persona_option = pick(rng, space.author_personas, "author persona");
  if (overrides.author_persona.value_or(persona)) p.author_persona = persona_option;
  p.paragraph_count = 1 + static_cast<int>(uniform_index(rng, 9));
  p.stories_per_completion = stories_for_paragraphs(p.paragraph_count, cfg.k);
  p.initial_pos = pick(rng, space.pos_options, "part of speech");
  std::vector<char> letters;
  std::vector<double> weights;
  for (const auto& [letter, w] : space.letter_frequencies) {
    letters.push_back(letter);
    weights.push_back(w);
  }
  if (letters.empty()) throw InvalidInput("cannot sample from empty letter frequency table");
  p.initial_letter = letters[weighted_index(rng, weights)];
  p.delimiter = cfg.delimiter;
  return p;
}

std::string render_prompt(const GenerationParams& p, const ParameterSpace& space) {
  std::string s;
  s += "Write " + std::to_string(p.stories_per_completion) + " short stories (" +
       std::to_string(p.paragraph_count) + " paragraphs each) using very basic words. ";
  s += "Do not number each story or write a headline. ";
  s += "Make the stories diverse by fully exploring the theme, but each story should be self-contained. ";
  s += "Separate the stories by putting \xE2\x80\x9C" + p.delimiter + "\xE2\x80\x9D in between. ";
  s += "Make the stories as qualitatively distinct to each other as possible. ";
  s += "In particular, never start two stories the same way! ";
  s += "Each story should be about " + p.theme + ", include " + p.topic + ", be " + p.style +
       " in its writing style and ideally feature " + p.narrative_feature + ". ";
  if (p.grammar_feature) {
    s += "The most important thing is to write an engaging easy story, but where it makes sense, "
         "demonstrate the use of " + *p.grammar_feature + ". ";
  }
  if (p.author_persona) s += "Write from the perspective of " + *p.author_persona + ". ";
  s += "If you need to use proper names, make them from space-separated common words. ";
  s += "Either don't give characters a name, or select from " + join(space.name_list, ", ") + ". ";
  s += "Complex story structure is great, but please remember to only use very simple words! ";
  s += "If you can, start the story with " + with_article(p.initial_pos) + " that begins with the letter " +
       std::string(1, p.initial_letter) + ".";
  return s;
}

SplitResult split_completion(const std::string& completion, const std::string& delimiter) {
  if (delimiter.empty()) throw InvalidInput("delimiter must not be empty");
  SplitResult r;
  const auto body = text::normalize_quotes(completion);
  const auto delim = text::normalize_quotes(delimiter);
  auto has_words = [](const std::string& s) {
    for (char32_t cp : text::decode_utf8(s)) {
      if (text::is_letter(cp) || text::is_digit(cp)) return true;
    }
    return false;
  };
  std::size_t pos = 0;
  bool last_closed = true;
  while (pos <= body.size()) {
    const auto hit = body.find(delim, pos);
    auto end = hit == std::string::npos ? body.size() : hit;
    auto next = hit == std::string::npos ? body.size() : hit + delim.size();
    // A quoted delimiter ("The End.") takes its quotes with it.
    if (hit != std::string::npos && hit > pos && body[hit - 1] == '"' && next < body.size() && body[next] == '"') {
      --end;
      ++next;
    }
    auto seg = text::trim(std::string_view(body).substr(pos, end - pos));
    if (hit == std::string::npos) {
      if (has_words(seg)) {
        r.stories.push_back(std::move(seg));
        last_closed = false;
      }
      break;
    }
    if (has_words(seg)) r.stories.push_back(std::move(seg));
    pos = next;
  }
  r.last_possibly_truncated = !last_closed;
  return r;
}

std::vector<StoryRecord> attach_labels(const std::vector<std::string>& texts, const GenerationParams& p,
                                       const BatchInfo& batch, bool last_possibly_truncated) {
  std::vector<StoryRecord> out;
  out.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    StoryRecord r;
    char suffix[16];
    std::snprintf(suffix, sizeof suffix, "-%03zu", i);
    r.id = batch.batch_id + suffix;
    r.text = texts[i];
    r.language = batch.language;
    r.labels = {p.theme, p.topic, p.style, p.narrative_feature, p.grammar_feature, p.author_persona};
    r.constraints = {p.initial_pos, p.initial_letter, p.paragraph_count, p.stories_per_completion, p.delimiter};
    r.metrics = post::compute_metrics(r.text);
    r.provenance = {batch.model, batch.batch_id, p.seed, batch.timestamp};
    r.possibly_truncated = last_possibly_truncated && i + 1 == texts.size();
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace sstories
