#include "sstories/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "sstories/errors.hpp"
#include "sstories/text.hpp"

namespace sstories {

namespace {

using ojson = nlohmann::ordered_json;

bool contains(const std::vector<std::string>& options, const std::string& v) {
  return std::find(options.begin(), options.end(), v) != options.end();
}

template <typename T>
T field(const nlohmann::json& obj, const char* key, const char* where) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw CorpusError(0, std::string("missing field \"") + key + "\" in " + where);
  }
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw CorpusError(0, std::string("field \"") + key + "\" in " + where + " has the wrong type");
  }
}

template <typename T>
std::optional<T> optional_field(const nlohmann::json& obj, const char* key, const char* where) {
  if (!obj.is_object() || !obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
  return field<T>(obj, key, where);
}

}  // namespace

ojson to_json(const StoryRecord& r) {
  ojson labels;
  labels["theme"] = r.labels.theme;
  labels["topic"] = r.labels.topic;
  labels["style"] = r.labels.style;
  labels["narrative_feature"] = r.labels.narrative_feature;
  labels["grammar_feature"] = r.labels.grammar_feature ? ojson(*r.labels.grammar_feature) : ojson();
  labels["author_persona"] = r.labels.author_persona ? ojson(*r.labels.author_persona) : ojson();

  ojson constraints;
  constraints["initial_pos"] = r.constraints.initial_pos;
  constraints["initial_letter"] = std::string(1, r.constraints.initial_letter);
  constraints["paragraph_count"] = r.constraints.paragraph_count;
  constraints["stories_per_completion"] = r.constraints.stories_per_completion;
  constraints["delimiter"] = r.constraints.delimiter;

  ojson metrics;
  metrics["word_count"] = r.metrics.word_count;
  metrics["fk_grade"] = r.metrics.fk_grade;
  metrics["ascii_clean"] = r.metrics.ascii_clean;

  ojson prov;
  prov["model"] = r.provenance.model;
  prov["batch_id"] = r.provenance.batch_id;
  prov["seed"] = r.provenance.seed;
  prov["timestamp"] = r.provenance.timestamp;

  ojson j;
  j["id"] = r.id;
  j["text"] = r.text;
  j["language"] = r.language;
  j["labels"] = std::move(labels);
  j["constraints"] = std::move(constraints);
  j["metrics"] = std::move(metrics);
  j["provenance"] = std::move(prov);
  j["possibly_truncated"] = r.possibly_truncated;
  return j;
}

StoryRecord story_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw CorpusError(0, "record is not a JSON object");
  StoryRecord r;
  r.id = field<std::string>(j, "id", "record");
  r.text = field<std::string>(j, "text", "record");
  r.language = optional_field<std::string>(j, "language", "record").value_or("en");

  if (!j.contains("labels")) throw CorpusError(0, "missing field \"labels\" in record");
  const auto& l = j.at("labels");
  r.labels.theme = field<std::string>(l, "theme", "labels");
  r.labels.topic = field<std::string>(l, "topic", "labels");
  r.labels.style = field<std::string>(l, "style", "labels");
  r.labels.narrative_feature = field<std::string>(l, "narrative_feature", "labels");
  r.labels.grammar_feature = optional_field<std::string>(l, "grammar_feature", "labels");
  r.labels.author_persona = optional_field<std::string>(l, "author_persona", "labels");

  if (!j.contains("constraints")) throw CorpusError(0, "missing field \"constraints\" in record");
  const auto& c = j.at("constraints");
  r.constraints.initial_pos = field<std::string>(c, "initial_pos", "constraints");
  const auto letter = field<std::string>(c, "initial_letter", "constraints");
  if (letter.size() != 1) throw CorpusError(0, "initial_letter must be a single letter");
  r.constraints.initial_letter = letter[0];
  r.constraints.paragraph_count = field<int>(c, "paragraph_count", "constraints");
  r.constraints.stories_per_completion = field<int>(c, "stories_per_completion", "constraints");
  r.constraints.delimiter = optional_field<std::string>(c, "delimiter", "constraints").value_or("The End.");

  if (!j.contains("metrics")) throw CorpusError(0, "missing field \"metrics\" in record");
  const auto& m = j.at("metrics");
  r.metrics.word_count = field<std::size_t>(m, "word_count", "metrics");
  r.metrics.fk_grade = field<double>(m, "fk_grade", "metrics");
  r.metrics.ascii_clean = field<bool>(m, "ascii_clean", "metrics");

  if (j.contains("provenance")) {
    const auto& p = j.at("provenance");
    r.provenance.model = optional_field<std::string>(p, "model", "provenance").value_or("");
    r.provenance.batch_id = optional_field<std::string>(p, "batch_id", "provenance").value_or("");
    r.provenance.seed = optional_field<std::uint64_t>(p, "seed", "provenance").value_or(0);
    r.provenance.timestamp = optional_field<std::int64_t>(p, "timestamp", "provenance").value_or(0);
  }
  r.possibly_truncated = optional_field<bool>(j, "possibly_truncated", "record").value_or(false);
  return r;
}

std::optional<std::string> check_record(const StoryRecord& r, const ParameterSpace& space) {
  if (r.id.empty()) return "id is empty";
  if (text::trim(r.text).empty()) return "text is empty";
  if (!contains(space.themes, r.labels.theme)) return "theme '" + r.labels.theme + "' is not a known option";
  if (!contains(space.topics, r.labels.topic)) return "topic '" + r.labels.topic + "' is not a known option";
  if (!contains(space.styles, r.labels.style)) return "style '" + r.labels.style + "' is not a known option";
  if (!contains(space.narrative_features, r.labels.narrative_feature)) {
    return "narrative_feature '" + r.labels.narrative_feature + "' is not a known option";
  }
  if (r.labels.grammar_feature && !contains(space.grammar_features, *r.labels.grammar_feature)) {
    return "grammar_feature '" + *r.labels.grammar_feature + "' is not a known option";
  }
  if (r.labels.author_persona && !contains(space.author_personas, *r.labels.author_persona)) {
    return "author_persona '" + *r.labels.author_persona + "' is not a known option";
  }
  if (!contains(space.pos_options, r.constraints.initial_pos)) {
    return "initial_pos '" + r.constraints.initial_pos + "' is not a known option";
  }
  if (r.constraints.initial_letter < 'a' || r.constraints.initial_letter > 'z') {
    return "initial_letter must be in a..z";
  }
  if (r.constraints.paragraph_count < 1 || r.constraints.paragraph_count > 9) {
    return "paragraph_count must be in 1..9";
  }
  if (r.constraints.stories_per_completion < 1) return "stories_per_completion must be positive";
  if (r.constraints.delimiter.empty()) return "delimiter is empty";
  if (r.metrics.word_count != text::word_tokenize(r.text).size()) {
    return "metrics.word_count does not match the text";
  }
  if (r.metrics.ascii_clean != text::is_ascii_clean(r.text)) {
    return "metrics.ascii_clean does not match the text";
  }
  return std::nullopt;
}

std::vector<StoryRecord> load_corpus(const std::filesystem::path& path, const ParameterSpace& space) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus " + path.string());
  std::vector<StoryRecord> out;
  std::set<std::string> ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw CorpusError(lineno, std::string("malformed JSON: ") + e.what());
    }
    StoryRecord r;
    try {
      r = story_from_json(j);
    } catch (const CorpusError& e) {
      throw CorpusError(lineno, e.what());
    }
    if (auto problem = check_record(r, space)) throw CorpusError(lineno, *problem);
    if (!ids.insert(r.id).second) throw CorpusError(lineno, "duplicate id '" + r.id + "'");
    out.push_back(std::move(r));
  }
  return out;
}

void save_corpus(const std::vector<StoryRecord>& records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write corpus " + path.string());
  for (const auto& r : records) out << to_json(r).dump() << '\n';
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<std::string> load_texts(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::string> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto trimmed = text::trim(line);
    if (trimmed.empty()) continue;
    if (trimmed.front() == '{') {
      try {
        const auto j = nlohmann::json::parse(trimmed);
        if (j.contains("text") && j.at("text").is_string()) {
          out.push_back(j.at("text").get<std::string>());
          continue;
        }
        if (j.contains("story") && j.at("story").is_string()) {
          out.push_back(j.at("story").get<std::string>());
          continue;
        }
        throw CorpusError(lineno, "JSON line has no \"text\" field");
      } catch (const nlohmann::json::parse_error& e) {
        throw CorpusError(lineno, std::string("malformed JSON: ") + e.what());
      }
    }
    out.push_back(trimmed);
  }
  return out;
}

}  // namespace sstories
