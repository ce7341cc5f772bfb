#pragma once
// Story data model, parameter-space catalog and JSONL persistence.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace sstories {

struct ParameterSpace {
  std::vector<std::string> themes;
  std::vector<std::string> topics;
  std::vector<std::string> styles;
  std::vector<std::string> narrative_features;
  std::vector<std::string> grammar_features;
  std::vector<std::string> author_personas;
  std::vector<std::string> name_list;
  std::map<char, double> letter_frequencies;
  std::vector<std::string> pos_options;

  // Throws InvalidInput naming the first violated invariant.
  void validate() const;
};

// The option lists used to generate the published English dataset.
ParameterSpace default_parameter_space();

// Reads a parameter-space JSON document. Absent keys keep their defaults.
ParameterSpace load_parameter_space(const std::filesystem::path& path);
nlohmann::ordered_json to_json(const ParameterSpace& space);
ParameterSpace parameter_space_from_json(const nlohmann::json& j);

struct LabelSet {
  std::string theme;
  std::string topic;
  std::string style;
  std::string narrative_feature;
  std::optional<std::string> grammar_feature;
  std::optional<std::string> author_persona;

  bool operator==(const LabelSet&) const = default;
};

struct ConstraintRecord {
  std::string initial_pos;  // adjective | adverb | noun | preposition
  char initial_letter = 'a';
  int paragraph_count = 1;
  int stories_per_completion = 1;
  std::string delimiter = "The End.";

  bool operator==(const ConstraintRecord&) const = default;
};

struct StoryMetrics {
  std::size_t word_count = 0;
  double fk_grade = 0.0;
  bool ascii_clean = true;

  bool operator==(const StoryMetrics&) const = default;
};

struct Provenance {
  std::string model;
  std::string batch_id;
  std::uint64_t seed = 0;
  std::int64_t timestamp = 0;  // UTC seconds

  bool operator==(const Provenance&) const = default;
};

struct StoryRecord {
  std::string id;
  std::string text;
  std::string language = "en";
  LabelSet labels;
  ConstraintRecord constraints;
  StoryMetrics metrics;
  Provenance provenance;
  // Set when the story was the last segment of a completion and had no
  // closing delimiter.
  bool possibly_truncated = false;

  bool operator==(const StoryRecord&) const = default;
};

nlohmann::ordered_json to_json(const StoryRecord& r);
// Throws CorpusError (line 0) on missing or mistyped fields.
StoryRecord story_from_json(const nlohmann::json& j);

// Checks record invariants against a parameter space; returns the first
// violation, or nullopt.
std::optional<std::string> check_record(const StoryRecord& r, const ParameterSpace& space);

std::vector<StoryRecord> load_corpus(const std::filesystem::path& path,
                                     const ParameterSpace& space = default_parameter_space());
void save_corpus(const std::vector<StoryRecord>& records, const std::filesystem::path& path);

// Lenient reader for analysis inputs: any JSONL with a "text" field, or a
// plain text file where each non-empty line is one story.
std::vector<std::string> load_texts(const std::filesystem::path& path);

}  // namespace sstories
