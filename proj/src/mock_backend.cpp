#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <regex>

#include "sstories/errors.hpp"
#include "sstories/llm_client.hpp"
#include "sstories/rng.hpp"

namespace sstories::llm {

namespace {

std::filesystem::path data_dir() {
  if (const char* env = std::getenv("SSTORIES_DATA_DIR")) return env;
  return SSTORIES_DATA_DIR;
}

struct WordPools {
  std::vector<std::string> nouns, adjectives, past_verbs, gerunds, adverbs, prepositions;
  std::map<std::string, std::vector<std::string>*> by_pos;
};

bool plain_lower(const std::string& w) {
  if (w.size() < 2) return false;
  for (char c : w) {
    if (c < 'a' || c > 'z') return false;
  }
  return true;
}

const WordPools& pools() {
  static const WordPools p = [] {
    WordPools w;
    const auto path = data_dir() / "pos" / "lexicon.tsv";
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    while (std::getline(in, line)) {
      const auto tab = line.find('\t');
      if (tab == std::string::npos) continue;
      const auto word = line.substr(0, tab);
      const auto tag = line.substr(tab + 1);
      if (!plain_lower(word)) continue;
      if (tag == "NN") w.nouns.push_back(word);
      else if (tag == "JJ") w.adjectives.push_back(word);
      else if (tag == "VBD") w.past_verbs.push_back(word);
      else if (tag == "VBG") w.gerunds.push_back(word);
      else if (tag == "RB" && word.size() > 4 && word.ends_with("ly")) w.adverbs.push_back(word);
    }
    w.prepositions = {"about", "above",  "across",  "after",  "against", "along",   "among",  "around",
                      "at",    "before", "behind",  "below",  "beneath", "beside",  "between", "beyond",
                      "by",    "during", "except",  "for",    "from",    "in",      "inside", "into",
                      "like",  "near",   "of",      "off",    "on",      "onto",    "outside", "over",
                      "past",  "since",  "through", "toward", "under",   "until",   "up",     "upon",
                      "via",   "with",   "within",  "without"};
    for (auto* v : {&w.nouns, &w.adjectives, &w.past_verbs, &w.gerunds, &w.adverbs}) {
      if (v->empty()) throw IoError("lexicon " + path.string() + " is missing a word class");
    }
    w.by_pos = {{"noun", &w.nouns}, {"adjective", &w.adjectives}, {"adverb", &w.adverbs},
                {"preposition", &w.prepositions}};
    return w;
  }();
  return p;
}

// Spatial prepositions for sentence bodies.
const std::vector<std::string> kPlaces = {"in", "on", "under", "near", "behind", "beside", "across", "over",
                                          "through", "around", "inside"};

class StoryWriter {
 public:
  StoryWriter(const PromptSlots& slots, std::uint64_t seed) : s_(slots), rng_(seed), w_(pools()) {}

  std::string story() {
    const std::vector<std::string> fallback = {"Sam", "Mia"};
    const auto& names = s_.names.empty() ? fallback : s_.names;
    hero_ = pick(names);
    friend_ = pick(names);
    std::string out;
    for (int p = 0; p < s_.paragraph_count; ++p) {
      if (p) out += "\n\n";
      const int sentences = 2 + static_cast<int>(uniform_index(rng_, 3));
      for (int i = 0; i < sentences; ++i) {
        if (i) out += ' ';
        out += (p == 0 && i == 0) ? opener() : sentence();
      }
    }
    return out;
  }

 private:
  const std::string& pick(const std::vector<std::string>& v) { return v[uniform_index(rng_, v.size())]; }
  std::string n() { return pick(w_.nouns); }
  std::string a() { return pick(w_.adjectives); }
  std::string v() { return pick(w_.past_verbs); }
  std::string g() { return pick(w_.gerunds); }
  std::string r() { return pick(w_.adverbs); }
  std::string place() { return pick(kPlaces); }

  static std::string cap(std::string s) {
    if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
    return s;
  }

  std::string opener() {
    const char letter = s_.initial_letter;
    auto starting = [&](const std::vector<std::string>& pool) {
      std::vector<std::string> out;
      for (const auto& x : pool) {
        if (x[0] == letter) out.push_back(x);
      }
      return out;
    };
    std::string pos = s_.initial_pos;
    std::vector<std::string> choices;
    if (auto it = w_.by_pos.find(pos); it != w_.by_pos.end()) choices = starting(*it->second);
    for (const char* alt : {"noun", "adjective", "adverb", "preposition"}) {
      if (!choices.empty()) break;
      pos = alt;
      choices = starting(*w_.by_pos.at(pos));
    }
    if (choices.empty()) return sentence();
    const auto first = cap(pick(choices));
    if (pos == "adjective") return first + " " + n() + " " + v() + " " + place() + " the " + n() + ".";
    if (pos == "adverb") return first + ", " + hero_ + " " + v() + " the " + a() + " " + n() + ".";
    if (pos == "preposition") return first + " the " + a() + " " + n() + ", " + hero_ + " " + v() + " a " + n() + ".";
    return first + " " + v() + " " + place() + " the " + a() + " " + n() + ".";
  }

  std::string sentence() {
    switch (uniform_index(rng_, 12)) {
      case 0:
        return "The " + a() + " " + n() + " " + v() + " the " + n() + ".";
      case 1:
        return hero_ + " " + v() + " " + r() + " " + place() + " the " + a() + " " + n() + ".";
      case 2:
        return hero_ + " and " + friend_ + " " + v() + " a " + n() + " together.";
      case 3:
        return "\"We can find the " + n() + ",\" " + hero_ + " said.";
      case 4:
        return "It was a " + a() + " day, and the " + n() + " was " + a() + ".";
      case 5:
        return hero_ + " liked " + g() + " " + place() + " the " + n() + ".";
      case 6:
        return "Then " + hero_ + " saw a " + a() + " " + n() + " " + place() + " the " + n() + ".";
      case 7:
        return hero_ + " felt " + a() + " when the " + n() + " " + v() + ".";
      case 8:
        return cap(r()) + ", the " + n() + " " + v() + " " + place() + " the " + a() + " " + n() + ".";
      case 9:
        return "Every " + n() + " in the " + n() + " was " + a() + ".";
      case 10:
        return friend_ + " asked, \"Why is the " + n() + " so " + a() + "?\"";
      default:
        return "After " + g() + " the " + n() + ", " + hero_ + " " + v() + " home.";
    }
  }

  const PromptSlots& s_;
  Rng rng_;
  const WordPools& w_;
  std::string hero_, friend_;
};

// Byte offset just past the first `keep` words.
std::size_t cut_after_words(const std::string& text, std::int64_t keep) {
  std::int64_t words = 0;
  bool in_word = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const bool space = std::isspace(static_cast<unsigned char>(text[i])) != 0;
    if (!space && !in_word) {
      if (words == keep) return i;
      ++words;
    }
    in_word = !space;
  }
  return text.size();
}

}  // namespace

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::int64_t approx_token_count(const std::string& text) {
  std::int64_t words = 0;
  bool in_word = false;
  for (unsigned char c : text) {
    const bool space = std::isspace(c) != 0;
    if (!space && !in_word) ++words;
    in_word = !space;
  }
  return (words * 4 + 2) / 3;
}

PromptSlots parse_prompt_slots(const std::string& prompt) {
  PromptSlots s;
  std::smatch m;
  if (std::regex_search(prompt, m, std::regex(R"(Write (\d+) short stor(?:y|ies) \((\d+) paragraphs? each\))"))) {
    s.story_count = std::max(1, std::stoi(m[1]));
    s.paragraph_count = std::max(1, std::stoi(m[2]));
  }
  if (std::regex_search(prompt, m, std::regex("putting (?:\xE2\x80\x9C|\")(.+?)(?:\xE2\x80\x9D|\") in between"))) {
    s.delimiter = m[1];
  }
  if (std::regex_search(prompt, m, std::regex(R"(start the story with an? (\w+) that begins with the letter (\w))"))) {
    s.initial_pos = m[1];
    s.initial_letter = static_cast<char>(std::tolower(static_cast<unsigned char>(m[2].str()[0])));
  }
  if (std::regex_search(prompt, m, std::regex(R"(or select from ([^.]*)\.)"))) {
    const std::string list = m[1];
    std::size_t pos = 0;
    while (pos <= list.size()) {
      auto comma = list.find(',', pos);
      if (comma == std::string::npos) comma = list.size();
      auto name = list.substr(pos, comma - pos);
      const auto b = name.find_first_not_of(' ');
      const auto e = name.find_last_not_of(' ');
      if (b != std::string::npos) s.names.push_back(name.substr(b, e - b + 1));
      pos = comma + 1;
    }
  }
  return s;
}

std::string mock_story_completion(const std::string& prompt) {
  const auto slots = parse_prompt_slots(prompt);
  const auto h = fnv1a64(prompt);
  std::string out;
  for (int i = 0; i < slots.story_count; ++i) {
    StoryWriter writer(slots, derive_seed(h, static_cast<std::uint64_t>(i)));
    if (i) out += "\n\n";
    out += writer.story();
    out += "\n\n" + slots.delimiter;
  }
  return out;
}

HttpResponse MockBackend::post(const std::string& request_body) {
  nlohmann::json req;
  try {
    req = nlohmann::json::parse(request_body);
  } catch (const nlohmann::json::parse_error&) {
    return {400, R"({"error":{"message":"request body is not JSON"}})"};
  }
  const auto& msgs = req.value("messages", nlohmann::json::array());
  if (!msgs.is_array() || msgs.empty() || !msgs.back().contains("content")) {
    return {400, R"({"error":{"message":"no messages"}})"};
  }
  const std::string prompt = msgs.back()["content"].get<std::string>();
  const auto max_tokens = req.value("max_tokens", std::int64_t{4096});
  std::string text = mock_story_completion(prompt);
  std::string finish = "stop";
  if (approx_token_count(text) > max_tokens) {
    text.resize(cut_after_words(text, max_tokens * 3 / 4));
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.pop_back();
    finish = "length";
  }
  nlohmann::ordered_json resp;
  char id[32];
  std::snprintf(id, sizeof id, "mock-%016llx", static_cast<unsigned long long>(fnv1a64(prompt)));
  resp["id"] = id;
  resp["object"] = "chat.completion";
  resp["model"] = req.value("model", std::string("mock"));
  resp["choices"] = nlohmann::ordered_json::array(
      {{{"index", 0}, {"message", {{"role", "assistant"}, {"content", text}}}, {"finish_reason", finish}}});
  const auto pt = approx_token_count(prompt);
  const auto ct = approx_token_count(text);
  resp["usage"] = {{"prompt_tokens", pt}, {"completion_tokens", ct}, {"total_tokens", pt + ct}};
  return {200, resp.dump()};
}

}  // namespace sstories::llm
