#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <string_view>

#include "sstories/corpus.hpp"
#include "sstories/errors.hpp"

namespace sstories {

namespace embedded {
extern const std::string_view kLetterFrequenciesJson;
}

namespace {

// Option lists as published for the English dataset.
const char* const kThemes[] = {
    "Friendship", "Courage", "Contradiction", "Coming of age", "Kindness", "Amnesia",
    "Adventure", "Imagination", "Family", "Perseverance", "Curiosity", "Honesty",
    "Romance", "Teamwork", "Responsibility", "Strategy", "Magic", "Discovery", "Betrayal",
    "Deception", "Generosity", "Creativity", "Self-Acceptance", "Helping Others",
    "Hardship", "Agency", "Power", "Revenge", "Independence", "Problem-Solving",
    "Resourcefulness", "Long-Term Thinking", "Optimism", "Humor", "Love",
    "The Five Senses", "Tradition", "Innovation", "Hope", "Dreams", "Belonging", "Travel",
    "Overcoming", "Trust", "Morality", "Happiness", "Consciousness", "Failure", "Conflict",
    "Cooperation", "Growth", "Loss", "Celebration", "Transformation", "Scheming",
    "Challenge", "Planning", "Wonder", "Surprises", "Conscience", "Intelligence", "Logic",
    "Resilience"
};

const char* const kTopics[] = {
    "talking animals", "fantasy worlds", "time travel", "a deadline or time limit",
    "space exploration", "mystical creatures", "underwater adventures", "dinosaurs",
    "pirates", "superheroes", "fairy tales", "outer space", "hidden treasures",
    "magical lands", "enchanted forests", "secret societies", "robots and technology",
    "sports", "school life", "holidays", "cultural traditions", "magical objects",
    "lost civilizations", "subterranean worlds", "bygone eras", "invisibility",
    "giant creatures", "miniature worlds", "alien encounters", "haunted places",
    "shape-shifting", "island adventures", "unusual vehicles", "undercover missions",
    "dream worlds", "virtual worlds", "riddles", "sibling rivalry", "treasure hunts",
    "snowy adventures", "seasonal changes", "mysterious maps", "royal kingdoms",
    "living objects", "gardens", "lost cities", "the arts", "the sky"
};

const char* const kStyles[] = {
    "whimsical", "playful", "epic", "fairy tale-like", "modern", "classic", "lyric",
    "mythological", "lighthearted", "adventurous", "heartwarming", "humorous", "mystical",
    "action-packed", "fable-like", "surreal", "philosophical", "melancholic", "noir",
    "romantic", "tragic", "minimalist", "suspenseful"
};

const char* const kNarrativeFeatures[] = {
    "dialogue", "in medias res", "a moral lesson", "absence indicating a presence",
    "a story told through letters", "a twist ending", "an unreliable narrator",
    "foreshadowing", "irony", "inner monologue", "symbolism", "a MacGuffin",
    "a non-linear timeline", "a reverse timeline", "circular narrative structure",
    "a flashback", "a nested structure", "a story within a story", "a Red Herring",
    "multiple perspectives", "Checkhov's gun", "the fourth wall", "a cliffhanger",
    "an anti-hero", "juxtaposition", "climactic structure"
};

const char* const kGrammarFeatures[] = {
    "present tense", "past tense", "future tense", "progressive aspect", "perfect aspect",
    "passive voice", "conditional mood", "imperative mood", "indicative mood",
    "relative clauses", "prepositional phrases", "indirect speech",
    "exclamatory sentences", "comparative forms", "superlative forms",
    "subordinate clauses", "ellipsis", "anaphora", "cataphora", "wh-questions",
    "yes-no questions", "gerunds", "participle phrases", "inverted sentences",
    "non-finite clauses", "determiners", "quantifiers", "adjective order",
    "parallel structure", "discourse markers", "appositive phrases"
};

const char* const kAuthorPersonas[] = {
    "an explorer archetype", "a rebellious author", "a powerful leader",
    "a wise, old person who wants to teach the young", "an innocent author",
    "a moralistic teacher", "a hopeless romantic", "a hurt, ill-intentioned person",
    "an academic", "a jester archetype", "a poet", "a philosopher", "a mother", "a father",
    "someone curious", "someone evil", "someone who wants to prove a point", "a child",
    "a pedant", "the everyman", "the oppressed", "a cruel person",
    "someone who loves order and structure"
};

// The published prompt leaves the name list open. Mia, Leo and Samuel are
// the names visible in the most frequent SimpleStories 4-grams; the rest is
// an extension of short, common, easily spelled names.
const char* const kNames[] = {
    "Mia", "Leo", "Samuel", "Lily", "Max", "Anna", "Ben", "Sara", "Tom", "Emma",
    "Lucy", "Jack", "Rosa", "Omar", "Nina", "Kai", "Zoe", "Finn", "Ava", "Sam",
    "Maya", "Eli", "Ruby", "Theo", "Ivy", "Noah", "Lena", "Hugo", "Ella", "Ravi"};

const char* const kPosOptions[] = {"adjective", "adverb", "noun", "preposition"};

template <std::size_t N>
std::vector<std::string> to_vector(const char* const (&items)[N]) {
  return {std::begin(items), std::end(items)};
}

void check_list(const std::vector<std::string>& items, std::string_view name) {
  if (items.empty()) throw InvalidInput("parameter space: " + std::string(name) + " is empty");
  std::set<std::string> seen;
  for (const auto& it : items) {
    if (!seen.insert(it).second) {
      throw InvalidInput("parameter space: duplicate entry '" + it + "' in " + std::string(name));
    }
  }
}

std::map<char, double> letter_frequencies_from_json(const nlohmann::json& j) {
  std::map<char, double> out;
  for (const auto& [key, value] : j.items()) {
    if (key.size() != 1 || key[0] < 'a' || key[0] > 'z') {
      throw InvalidInput("letter_frequencies: key '" + key + "' is not a lowercase letter");
    }
    out[key[0]] = value.get<double>();
  }
  return out;
}

}  // namespace

void ParameterSpace::validate() const {
  check_list(themes, "themes");
  check_list(topics, "topics");
  check_list(styles, "styles");
  check_list(narrative_features, "narrative_features");
  check_list(grammar_features, "grammar_features");
  check_list(author_personas, "author_personas");
  check_list(name_list, "name_list");
  check_list(pos_options, "pos_options");
  double sum = 0.0;
  for (const auto& [letter, p] : letter_frequencies) {
    if (!(p >= 0.0)) throw InvalidInput(std::string("letter_frequencies: negative weight for ") + letter);
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw InvalidInput("letter_frequencies: weights sum to " + std::to_string(sum) + ", expected 1");
  }
}

ParameterSpace default_parameter_space() {
  ParameterSpace s;
  s.themes = to_vector(kThemes);
  s.topics = to_vector(kTopics);
  s.styles = to_vector(kStyles);
  s.narrative_features = to_vector(kNarrativeFeatures);
  s.grammar_features = to_vector(kGrammarFeatures);
  s.author_personas = to_vector(kAuthorPersonas);
  s.name_list = to_vector(kNames);
  s.pos_options = to_vector(kPosOptions);
  const auto j = nlohmann::json::parse(embedded::kLetterFrequenciesJson);
  s.letter_frequencies = letter_frequencies_from_json(j.at("letter_frequencies"));
  return s;
}

nlohmann::ordered_json to_json(const ParameterSpace& space) {
  nlohmann::ordered_json j;
  j["themes"] = space.themes;
  j["topics"] = space.topics;
  j["styles"] = space.styles;
  j["narrative_features"] = space.narrative_features;
  j["grammar_features"] = space.grammar_features;
  j["author_personas"] = space.author_personas;
  j["name_list"] = space.name_list;
  nlohmann::ordered_json freq = nlohmann::ordered_json::object();
  for (const auto& [letter, p] : space.letter_frequencies) freq[std::string(1, letter)] = p;
  j["letter_frequencies"] = freq;
  j["pos_options"] = space.pos_options;
  return j;
}

ParameterSpace parameter_space_from_json(const nlohmann::json& j) {
  ParameterSpace s = default_parameter_space();
  try {
    auto read = [&](const char* key, std::vector<std::string>& dst) {
      if (j.contains(key)) dst = j.at(key).get<std::vector<std::string>>();
    };
    read("themes", s.themes);
    read("topics", s.topics);
    read("styles", s.styles);
    read("narrative_features", s.narrative_features);
    read("grammar_features", s.grammar_features);
    read("author_personas", s.author_personas);
    read("name_list", s.name_list);
    read("pos_options", s.pos_options);
    if (j.contains("letter_frequencies")) {
      s.letter_frequencies = letter_frequencies_from_json(j.at("letter_frequencies"));
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("parameter space: ") + e.what());
  }
  s.validate();
  return s;
}

ParameterSpace load_parameter_space(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open parameter space file " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidInput("parameter space " + path.string() + ": " + e.what());
  }
  return parameter_space_from_json(j);
}

}  // namespace sstories
