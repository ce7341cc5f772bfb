#include "sstories/pos_tagger.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>

#include <json.hpp>

#include "sstories/errors.hpp"
#include "sstories/rng.hpp"
#include "sstories/text.hpp"

namespace sstories::pos {

namespace {

constexpr const char* kFormat = "sstories-pos-perceptron";
constexpr int kVersion = 1;

const std::unordered_map<std::string, std::string>& closed_class_table() {
  static const std::unordered_map<std::string, std::string> table = [] {
    std::unordered_map<std::string, std::string> t;
    auto add = [&](const char* tag, std::initializer_list<const char*> words) {
      for (const char* w : words) t[w] = tag;
    };
    add("DT", {"the", "a", "an", "these", "those", "every", "each", "another"});
    add("IN", {"of", "in", "at", "with", "from", "into", "onto", "upon", "during", "among", "because",
               "although", "until", "without", "within", "beneath", "beside", "between", "toward",
               "towards", "against", "despite", "whether", "if", "for", "by", "on", "than", "unless"});
    add("PRP", {"i", "you", "he", "she", "it", "we", "they", "me", "him", "us", "them", "myself",
                "yourself", "himself", "herself", "itself", "ourselves", "themselves"});
    add("PRP$", {"my", "your", "its", "our", "their"});
    add("CC", {"and", "but", "or", "nor"});
    add("MD", {"can", "could", "will", "would", "shall", "should", "may", "might", "must"});
    add("WP", {"who", "whom"});
    add("WRB", {"where", "why", "how", "when"});
    add("WDT", {"which"});
    add("RB", {"not"});
    return t;
  }();
  return table;
}

std::optional<std::string> punctuation_tag(const std::string& token) {
  static const std::unordered_map<std::string, std::string> table = {
      {".", "."}, {"!", "."}, {"?", "."}, {",", ","}, {";", ":"}, {":", ":"},
      {"-", ":"}, {"–", ":"}, {"—", ":"}, {"…", ":"}, {"(", "-LRB-"},
      {")", "-RRB-"}, {"[", "-LRB-"}, {"]", "-RRB-"}, {"“", "``"}, {"”", "''"},
      {"‘", "``"}, {"’", "''"}, {"'", "''"}, {"$", "$"}, {"#", "#"}};
  auto it = table.find(token);
  if (it != table.end()) return it->second;
  if (!text::is_word_token(token)) return std::string("SYM");
  return std::nullopt;
}

bool all_digits(const std::string& token) {
  if (token.empty()) return false;
  return std::all_of(token.begin(), token.end(), [](char c) { return c >= '0' && c <= '9'; });
}

bool starts_upper(const std::string& token) {
  const auto u = text::decode_utf8(token);
  return !u.empty() && text::is_upper(u.front());
}

std::string suffix(const std::string& w, std::size_t n) {
  const auto u = text::decode_utf8(w);
  if (u.size() <= n) return w;
  return text::encode_utf8(std::u32string_view(u).substr(u.size() - n));
}

std::string prefix1(const std::string& w) {
  const auto u = text::decode_utf8(w);
  if (u.empty()) return w;
  return text::encode_utf8(std::u32string_view(u).substr(0, 1));
}

std::string shape(const std::string& w) {
  const auto u = text::decode_utf8(w);
  if (u.empty()) return "empty";
  bool has_digit = false, has_upper = false, has_lower = false;
  for (char32_t cp : u) {
    if (text::is_digit(cp)) has_digit = true;
    if (text::is_upper(cp)) has_upper = true;
    if (text::is_letter(cp) && !text::is_upper(cp)) has_lower = true;
  }
  if (has_digit) return "digit";
  if (has_upper && !has_lower) return u.size() == 1 ? "cap" : "upper";
  if (text::is_upper(u.front())) return "cap";
  if (has_lower) return "lower";
  return "other";
}

bool starts_clause(std::span<const std::string> tokens, std::size_t i) {
  if (i == 0) return true;
  static const std::set<std::string> openers = {".", "!", "?", "\"", "“", "”", ":", "(",
                                                "'", "‘", "’", ";", "-", "—"};
  return openers.count(tokens[i - 1]) > 0;
}

}  // namespace

std::optional<std::string> closed_class_tag(const std::string& token) {
  if (auto p = punctuation_tag(token)) return p;
  const auto& table = closed_class_table();
  auto it = table.find(text::to_lower(token));
  if (it != table.end()) return it->second;
  return std::nullopt;
}

std::optional<std::string> coarse_class(const std::string& penn_tag) {
  if (penn_tag.rfind("JJ", 0) == 0) return std::string("adjective");
  if (penn_tag.rfind("RB", 0) == 0) return std::string("adverb");
  if (penn_tag.rfind("NN", 0) == 0) return std::string("noun");
  if (penn_tag == "IN") return std::string("preposition");
  return std::nullopt;
}

TaggedSentence parse_tagged_line(const std::string& line) {
  TaggedSentence s;
  std::istringstream in(line);
  std::string item;
  while (in >> item) {
    const auto slash = item.rfind('/');
    if (slash == std::string::npos || slash == 0 || slash + 1 == item.size()) {
      throw ParseError("tagged token without word/TAG form: '" + item + "'");
    }
    s.tokens.push_back(item.substr(0, slash));
    s.tags.push_back(item.substr(slash + 1));
  }
  return s;
}

std::vector<TaggedSentence> read_tagged_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open tagged file " + path.string());
  std::vector<TaggedSentence> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = text::trim(line);
    if (t.empty() || t[0] == '#') continue;
    try {
      out.push_back(parse_tagged_line(t));
    } catch (const ParseError& e) {
      throw CorpusError(lineno, e.what());
    }
  }
  return out;
}

std::optional<std::string> PosTagger::lexicon_tag(const std::string& token) const {
  auto it = lexicon_.find(token);
  if (it != lexicon_.end()) return it->second;
  it = lexicon_.find(text::to_lower(token));
  if (it != lexicon_.end()) return it->second;
  return std::nullopt;
}

bool PosTagger::is_unknown(const std::string& token) const {
  const auto lower = text::to_lower(token);
  return known_words_.count(lower) == 0 && lexicon_.count(lower) == 0;
}

std::optional<std::string> PosTagger::rule_tag(std::span<const std::string> tokens, std::size_t i,
                                               int& quote_parity) const {
  const auto& tok = tokens[i];
  if (tok == "\"") {
    quote_parity ^= 1;
    return std::string(quote_parity ? "``" : "''");
  }
  if (auto c = closed_class_tag(tok)) return c;
  const auto lower = text::to_lower(tok);
  const std::string next = i + 1 < tokens.size() ? text::to_lower(tokens[i + 1]) : std::string();
  // "to" is TO before a verb and IN before a noun phrase; the clear noun
  // phrase cases are settled here, the rest by the model.
  if (lower == "to") {
    if (next.empty() || !text::is_word_token(next)) return std::string("IN");
    const auto c = closed_class_tag(next);
    if (c && (*c == "DT" || *c == "PRP$" || *c == "PRP" || *c == "IN")) return std::string("IN");
    if (all_digits(next)) return std::string("IN");
  }
  if (lower == "there") {
    static const std::set<std::string> existential = {"is", "was", "were", "are", "be", "'s", "lived", "lives",
                                                      "seemed", "seems", "stood", "stands", "came", "remained",
                                                      "existed", "used", "once"};
    if (existential.count(next)) return std::string("EX");
  }
  if (all_digits(tok)) return std::string("CD");
  if (starts_upper(tok) && !starts_clause(tokens, i) && is_unknown(tok)) return std::string("NNP");
  return std::nullopt;
}

std::vector<std::string> PosTagger::features(std::span<const std::string> tokens, std::size_t i,
                                             const std::string& prev, const std::string& prev2) const {
  auto word_at = [&](std::ptrdiff_t k) -> std::string {
    const auto j = static_cast<std::ptrdiff_t>(i) + k;
    if (j < 0) return k == -1 ? "-START-" : "-START2-";
    if (j >= static_cast<std::ptrdiff_t>(tokens.size())) return k == 1 ? "-END-" : "-END2-";
    return text::to_lower(tokens[static_cast<std::size_t>(j)]);
  };
  auto lex_at = [&](std::ptrdiff_t k) -> std::string {
    const auto j = static_cast<std::ptrdiff_t>(i) + k;
    if (j < 0 || j >= static_cast<std::ptrdiff_t>(tokens.size())) return "-";
    const auto& t = tokens[static_cast<std::size_t>(j)];
    if (auto c = closed_class_tag(t)) return *c;
    return lexicon_tag(t).value_or("NONE");
  };
  const std::string& raw = tokens[i];
  const std::string w = word_at(0);
  const std::string p1 = word_at(-1);
  const std::string n1 = word_at(1);
  const std::string lex = lex_at(0);
  const bool clause_start = starts_clause(tokens, i);
  std::vector<std::string> f;
  f.reserve(24);
  f.emplace_back("bias");
  f.push_back("w=" + w);
  f.push_back("suf3=" + suffix(w, 3));
  f.push_back("suf2=" + suffix(w, 2));
  f.push_back("pre1=" + prefix1(w));
  f.push_back("shape=" + shape(raw) + (clause_start ? "/start" : "/mid"));
  f.push_back("lex=" + lex);
  f.push_back("lex+p1t=" + lex + "|" + prev);
  f.push_back("lex+n1lex=" + lex + "|" + lex_at(1));
  f.push_back("p1t=" + prev);
  f.push_back("p2t=" + prev2);
  f.push_back("p1t+p2t=" + prev + "|" + prev2);
  f.push_back("p1t+w=" + prev + "|" + w);
  f.push_back("p1w=" + p1);
  f.push_back("p1suf3=" + suffix(p1, 3));
  f.push_back("p1lex=" + lex_at(-1));
  f.push_back("p2w=" + word_at(-2));
  f.push_back("n1w=" + n1);
  f.push_back("n1suf3=" + suffix(n1, 3));
  f.push_back("n1lex=" + lex_at(1));
  f.push_back("n2w=" + word_at(2));
  return f;
}

std::size_t PosTagger::predict(const std::vector<std::string>& feats) const {
  std::vector<double> scores(tags_.size(), 0.0);
  for (const auto& f : feats) {
    auto it = weights_.find(f);
    if (it == weights_.end()) continue;
    for (std::size_t t = 0; t < scores.size(); ++t) scores[t] += it->second[t];
  }
  // Strict comparison: the first tag in the fixed (sorted) order wins ties.
  std::size_t best = 0;
  for (std::size_t t = 1; t < scores.size(); ++t) {
    if (scores[t] > scores[best]) best = t;
  }
  return best;
}

std::vector<std::string> PosTagger::tag(std::span<const std::string> tokens) const {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  std::string prev = "-START-";
  std::string prev2 = "-START2-";
  int quote_parity = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    std::string t;
    if (auto r = rule_tag(tokens, i, quote_parity)) {
      t = *r;
    } else if (!tags_.empty()) {
      t = tags_[predict(features(tokens, i, prev, prev2))];
    } else {
      t = "NN";
    }
    prev2 = prev;
    prev = t;
    out.push_back(std::move(t));
  }
  return out;
}

PosTagger PosTagger::train(const std::vector<TaggedSentence>& sentences,
                           std::unordered_map<std::string, std::string> lexicon,
                           const TrainOptions& options) {
  PosTagger model;
  model.lexicon_ = std::move(lexicon);
  std::set<std::string> tagset;
  for (const auto& s : sentences) {
    if (s.tokens.size() != s.tags.size()) throw InvalidInput("tagged sentence with mismatched lengths");
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      tagset.insert(s.tags[i]);
      if (text::is_word_token(s.tokens[i])) model.known_words_.insert(text::to_lower(s.tokens[i]));
    }
  }
  model.tags_.assign(tagset.begin(), tagset.end());
  std::unordered_map<std::string, std::size_t> tag_index;
  for (std::size_t i = 0; i < model.tags_.size(); ++i) tag_index[model.tags_[i]] = i;

  // Averaged perceptron bookkeeping: running totals and the step at which
  // each weight last changed.
  std::unordered_map<std::string, std::vector<double>> totals;
  std::unordered_map<std::string, std::vector<std::int64_t>> stamps;
  std::int64_t step = 0;
  const std::size_t ntags = model.tags_.size();
  auto update = [&](const std::string& f, std::size_t t, double delta) {
    auto& w = model.weights_[f];
    auto& tot = totals[f];
    auto& st = stamps[f];
    if (w.empty()) {
      w.assign(ntags, 0.0);
      tot.assign(ntags, 0.0);
      st.assign(ntags, 0);
    }
    tot[t] += static_cast<double>(step - st[t]) * w[t];
    st[t] = step;
    w[t] += delta;
  };

  std::vector<std::size_t> order(sentences.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(options.seed);
  for (int iter = 0; iter < options.iterations; ++iter) {
    for (std::size_t si : order) {
      const auto& s = sentences[si];
      std::string prev = "-START-";
      std::string prev2 = "-START2-";
      int quote_parity = 0;
      for (std::size_t i = 0; i < s.tokens.size(); ++i) {
        std::string guess;
        if (auto r = model.rule_tag(s.tokens, i, quote_parity)) {
          guess = *r;
        } else {
          ++step;
          const auto feats = model.features(s.tokens, i, prev, prev2);
          const std::size_t g = model.predict(feats);
          const std::size_t truth = tag_index.at(s.tags[i]);
          if (g != truth) {
            for (const auto& f : feats) {
              update(f, truth, 1.0);
              update(f, g, -1.0);
            }
          }
          guess = model.tags_[g];
        }
        prev2 = prev;
        prev = guess;
      }
    }
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[uniform_index(rng, i)]);
    }
  }
  for (auto& [f, w] : model.weights_) {
    auto& tot = totals[f];
    auto& st = stamps[f];
    for (std::size_t t = 0; t < ntags; ++t) {
      const double total = tot[t] + static_cast<double>(step - st[t]) * w[t];
      w[t] = step > 0 ? total / static_cast<double>(step) : w[t];
    }
  }
  return model;
}

void PosTagger::save(const std::filesystem::path& weights_file) const {
  nlohmann::json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["tags"] = tags_;
  nlohmann::json weights = nlohmann::json::object();
  for (const auto& [f, w] : weights_) {
    nlohmann::json sparse = nlohmann::json::object();
    for (std::size_t t = 0; t < w.size(); ++t) {
      const double rounded = std::round(w[t] * 1e4) / 1e4;
      if (rounded != 0.0) sparse[tags_[t]] = rounded;
    }
    if (!sparse.empty()) weights[f] = std::move(sparse);
  }
  j["weights"] = std::move(weights);
  j["lexicon"] = nlohmann::json(std::map<std::string, std::string>(lexicon_.begin(), lexicon_.end()));
  j["known_words"] = std::set<std::string>(known_words_.begin(), known_words_.end());
  std::ofstream out(weights_file, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write tagger weights " + weights_file.string());
  out << j.dump() << '\n';
}

PosTagger PosTagger::load(const std::filesystem::path& weights_file) {
  std::ifstream in(weights_file, std::ios::binary);
  if (!in) throw IoError("cannot open tagger weights " + weights_file.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("tagger weights " + weights_file.string() + ": " + e.what());
  }
  if (j.value("format", "") != kFormat || j.value("version", 0) != kVersion) {
    throw ParseError("tagger weights " + weights_file.string() + ": unsupported format");
  }
  PosTagger m;
  m.tags_ = j.at("tags").get<std::vector<std::string>>();
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < m.tags_.size(); ++i) index[m.tags_[i]] = i;
  for (const auto& [f, sparse] : j.at("weights").items()) {
    std::vector<double> w(m.tags_.size(), 0.0);
    for (const auto& [tag, v] : sparse.items()) w.at(index.at(tag)) = v.get<double>();
    m.weights_.emplace(f, std::move(w));
  }
  for (const auto& [word, tag] : j.at("lexicon").items()) m.lexicon_.emplace(word, tag.get<std::string>());
  for (const auto& w : j.at("known_words")) m.known_words_.insert(w.get<std::string>());
  return m;
}

std::filesystem::path PosTagger::default_weights_path() {
  if (const char* env = std::getenv("SSTORIES_DATA_DIR")) {
    return std::filesystem::path(env) / "pos" / "tagger_weights.json";
  }
  return std::filesystem::path(SSTORIES_DATA_DIR) / "pos" / "tagger_weights.json";
}

const PosTagger& PosTagger::default_tagger() {
  static const PosTagger tagger = load(default_weights_path());
  return tagger;
}

}  // namespace sstories::pos
