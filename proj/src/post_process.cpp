#include "sstories/post_process.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <unordered_map>

#include "sstories/errors.hpp"
#include "sstories/text.hpp"

namespace sstories::post {

namespace {

bool is_vowel(char32_t c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u' || c == 'y'; }

std::filesystem::path data_dir() {
  if (const char* env = std::getenv("SSTORIES_DATA_DIR")) return env;
  return SSTORIES_DATA_DIR;
}

// Parts shorter than this are not accepted when splitting a compound name.
constexpr std::size_t kMinCompoundPart = 3;

}  // namespace

int count_syllables(std::string_view word) {
  std::u32string w;
  for (char32_t cp : text::decode_utf8(word)) {
    if (text::is_letter(cp)) w.push_back(text::to_lower(cp));
  }
  int groups = 0;
  bool in_group = false;
  for (char32_t c : w) {
    const bool v = is_vowel(c);
    if (v && !in_group) ++groups;
    in_group = v;
  }
  const auto n = w.size();
  if (n >= 2 && w[n - 1] == 'e' && w[n - 2] != 'l') --groups;
  return std::max(groups, 1);
}

double flesch_kincaid_grade(std::string_view text) {
  const auto words = text::word_tokenize(text);
  if (words.empty()) throw InvalidInput("Flesch-Kincaid grade of a text without words");
  std::size_t sentences = 0;
  for (const auto& s : text::split_sentences(text)) {
    if (!text::word_tokenize(s).empty()) ++sentences;
  }
  long syllables = 0;
  for (const auto& w : words) syllables += count_syllables(w);
  const double wps = static_cast<double>(words.size()) / static_cast<double>(sentences);
  const double spw = static_cast<double>(syllables) / static_cast<double>(words.size());
  return 0.39 * wps + 11.8 * spw - 15.59;
}

StoryMetrics compute_metrics(std::string_view story) {
  StoryMetrics m;
  m.word_count = text::word_tokenize(story).size();
  m.fk_grade = m.word_count > 0 ? flesch_kincaid_grade(story) : 0.0;
  m.ascii_clean = text::is_ascii_clean(story);
  return m;
}

std::string_view to_string(Status s) {
  switch (s) {
    case Status::kPass:
      return "pass";
    case Status::kWarn:
      return "warn";
    case Status::kFail:
      return "fail";
    case Status::kSkipped:
      return "skipped";
  }
  return "unknown";
}

const Check* ValidationReport::find(std::string_view name) const {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

const std::unordered_set<std::string>& default_common_words() {
  static const std::unordered_set<std::string> words = [] {
    std::unordered_set<std::string> out;
    const auto path = data_dir() / "common_words.txt";
    std::ifstream in(path);
    if (!in) throw IoError("cannot open word list " + path.string());
    std::string line;
    while (std::getline(in, line)) {
      auto w = text::trim(line);
      if (!w.empty()) out.insert(text::to_lower(w));
    }
    return out;
  }();
  return words;
}

bool decomposes_into_common_words(const std::string& lower_word, const std::unordered_set<std::string>& common) {
  if (common.count(lower_word)) return true;
  const auto n = lower_word.size();
  // reachable[i]: the prefix of length i splits into common parts.
  std::vector<bool> reachable(n + 1, false);
  reachable[0] = true;
  for (std::size_t i = 0; i < n; ++i) {
    if (!reachable[i]) continue;
    for (std::size_t len = kMinCompoundPart; i + len <= n; ++len) {
      if (common.count(lower_word.substr(i, len))) reachable[i + len] = true;
    }
  }
  return reachable[n];
}

ValidationReport validate_story(const StoryRecord& record, const ValidationOptions& options) {
  ValidationReport report;
  report.story_id = record.id;
  const auto& c = record.constraints;

  {
    Check ch{"first_letter", Status::kFail, ""};
    const auto words = text::word_tokenize(record.text);
    if (words.empty()) {
      ch.detail = "story has no words";
    } else {
      const auto first = text::decode_utf8(words.front()).front();
      if (first == static_cast<char32_t>(c.initial_letter)) {
        ch.status = Status::kPass;
      } else {
        ch.detail = "first word '" + words.front() + "' does not begin with '" + std::string(1, c.initial_letter) + "'";
      }
    }
    report.checks.push_back(std::move(ch));
  }

  {
    Check ch{"first_pos", Status::kSkipped, ""};
    if (options.tagger != nullptr) {
      const auto sentences = text::split_sentences(record.text);
      const auto tokens = sentences.empty() ? std::vector<std::string>{} : text::tag_tokenize(sentences.front());
      const auto tags = options.tagger->tag(tokens);
      std::size_t i = 0;
      while (i < tokens.size() && !text::is_word_token(tokens[i])) ++i;
      if (i == tokens.size()) {
        ch.status = Status::kWarn;
        ch.detail = "no word in first sentence";
      } else {
        const auto coarse = pos::coarse_class(tags[i]);
        if (coarse && *coarse == c.initial_pos) {
          ch.status = Status::kPass;
        } else {
          ch.status = Status::kWarn;
          ch.detail = "first word '" + tokens[i] + "' tagged " + tags[i] + ", expected " + c.initial_pos;
        }
      }
    }
    report.checks.push_back(std::move(ch));
  }

  {
    Check ch{"ascii_clean", Status::kPass, ""};
    if (!text::is_ascii_clean(record.text)) {
      ch.status = Status::kFail;
      ch.detail = "text contains non-ASCII or control characters";
    }
    report.checks.push_back(std::move(ch));
  }

  {
    Check ch{"delimiter_residue", Status::kPass, ""};
    const auto body = text::normalize_quotes(record.text);
    const auto delim = text::normalize_quotes(c.delimiter);
    if (!delim.empty() && body.find(delim) != std::string::npos) {
      ch.status = Status::kFail;
      ch.detail = "delimiter '" + c.delimiter + "' occurs inside the story";
    }
    report.checks.push_back(std::move(ch));
  }

  {
    Check ch{"name_whitelist", Status::kPass, ""};
    const auto& common = options.common_words ? *options.common_words : default_common_words();
    std::unordered_set<std::string> allowed;
    for (const auto& n : options.name_list) allowed.insert(text::to_lower(n));
    std::vector<std::string> offenders;
    for (const auto& sentence : text::split_sentences(record.text)) {
      const auto toks = text::tag_tokenize(sentence);
      bool seen_word = false;
      for (std::size_t i = 0; i < toks.size(); ++i) {
        const auto& t = toks[i];
        if (!text::is_word_token(t)) continue;
        const bool clause_start = !seen_word || (i > 0 && (toks[i - 1] == "\"" || toks[i - 1] == "“" ||
                                                           toks[i - 1] == ":" || toks[i - 1] == "'"));
        seen_word = true;
        const auto u = text::decode_utf8(t);
        if (clause_start || !text::is_upper(u.front()) || t == "I") continue;
        auto lower = text::to_lower(t);
        // Possessive or contracted forms are judged by their stem.
        if (auto apos = lower.find('\''); apos != std::string::npos) lower.resize(apos);
        if (allowed.count(lower) || decomposes_into_common_words(lower, common)) continue;
        if (std::find(offenders.begin(), offenders.end(), t) == offenders.end()) offenders.push_back(t);
      }
    }
    if (!offenders.empty()) {
      ch.status = Status::kWarn;
      ch.detail = "names outside the list:";
      for (const auto& o : offenders) ch.detail += " " + o;
    }
    report.checks.push_back(std::move(ch));
  }

  bool hard_fail = false;
  bool soft = false;
  for (const auto& ch : report.checks) {
    const bool hard = ch.name == "first_letter" || ch.name == "ascii_clean";
    if (ch.status == Status::kFail && hard) hard_fail = true;
    if (ch.status == Status::kWarn || (ch.status == Status::kFail && !hard)) soft = true;
  }
  report.overall = hard_fail ? Status::kFail : (soft ? Status::kWarn : Status::kPass);
  return report;
}

std::string dedup_key(std::string_view story) { return text::collapse_whitespace(text::to_lower(story)); }

DedupResult dedup(std::vector<StoryRecord> records) {
  DedupResult result;
  std::unordered_map<std::string, std::string> first_by_key;
  for (auto& r : records) {
    auto key = dedup_key(r.text);
    auto [it, inserted] = first_by_key.emplace(std::move(key), r.id);
    if (inserted) {
      result.kept.push_back(std::move(r));
    } else {
      result.dropped.emplace_back(r.id, it->second);
    }
  }
  return result;
}

}  // namespace sstories::post
