#include "sstories/wordpiece.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

#include <openssl/evp.h>

#include <json.hpp>

#include "sstories/errors.hpp"
#include "sstories/text.hpp"

namespace sstories::wordpiece {

namespace {

constexpr std::size_t kMinSeedStem = 2;
constexpr std::size_t kMaxWordChars = 200;

bool closes(const std::string& t) {
  static const std::set<std::string> k = {".", ",", "!", "?", ";", ":", ")", "]", "}", "%", "\xE2\x80\xA6"};
  return k.count(t) > 0;
}

bool opens(const std::string& t) {
  static const std::set<std::string> k = {"(", "[", "{", "$"};
  return k.count(t) > 0;
}

bool glue(const std::string& t) { return t == "'" || t == "-" || t == "/"; }

std::vector<std::string> chars_of(const std::string& word) {
  std::vector<std::string> out;
  for (char32_t cp : text::decode_utf8(word)) {
    std::string c;
    text::append_utf8(c, cp);
    out.push_back(std::move(c));
  }
  return out;
}

bool all_letters(const std::u32string& w) {
  return !w.empty() && std::all_of(w.begin(), w.end(), [](char32_t c) { return text::is_letter(c); });
}

std::string strip_continuation(const std::string& t) {
  return t.rfind(kContinuation, 0) == 0 ? t.substr(kContinuation.size()) : t;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path sidecar(const std::filesystem::path& p) { return p.string() + ".json"; }

}  // namespace

std::vector<std::string> pretokenize(std::string_view input) {
  std::vector<std::string> out;
  std::string cur;
  for (char32_t cp : text::decode_utf8(input)) {
    cp = text::to_lower(cp);
    if (text::is_space(cp)) {
      if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
    } else if (text::is_letter(cp) || text::is_digit(cp)) {
      text::append_utf8(cur, cp);
    } else {
      if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
      std::string p;
      text::append_utf8(p, cp);
      out.push_back(std::move(p));
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::string render(const std::vector<std::string>& toks) {
  std::string out;
  bool quote_open = false;
  bool prev_quote_opened = false;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    const auto& t = toks[i];
    bool this_quote_opens = false;
    bool space = i > 0;
    if (t == "\"") {
      this_quote_opens = !quote_open;
      quote_open = !quote_open;
      if (!this_quote_opens) space = false;
    }
    if (i > 0) {
      const auto& prev = toks[i - 1];
      if (closes(t) || opens(prev) || glue(t) || glue(prev)) space = false;
      if (prev == "\"" && prev_quote_opened) space = false;
    }
    if (space) out += ' ';
    out += t;
    prev_quote_opened = this_quote_opens;
  }
  return out;
}

std::string normalize(std::string_view text) { return render(pretokenize(text)); }

AffixList discover_affixes(const std::vector<std::string>& corpus, const AffixOptions& opts) {
  if (corpus.empty()) throw InvalidInput("affix discovery needs a non-empty corpus");
  if (opts.min_support < 2) throw InvalidInput("min_support must be at least 2");
  std::set<std::u32string> types;
  for (const auto& doc : corpus) {
    for (const auto& t : pretokenize(doc)) {
      auto u = text::decode_utf8(t);
      if (all_letters(u)) types.insert(std::move(u));
    }
  }
  std::map<std::u32string, std::size_t> pre, suf;
  for (const auto& w : types) {
    for (std::size_t len = opts.min_affix_len; len <= opts.max_affix_len; ++len) {
      if (w.size() < len + opts.min_stem_len) break;
      if (types.count(w.substr(0, w.size() - len))) ++suf[w.substr(w.size() - len)];
      if (types.count(w.substr(len))) ++pre[w.substr(0, len)];
    }
  }
  struct Cand {
    bool prefix;
    std::string text;
    std::size_t support;
  };
  std::vector<Cand> cands;
  for (const auto& [a, s] : pre) {
    if (s >= opts.min_support) cands.push_back({true, text::encode_utf8(a), s});
  }
  for (const auto& [a, s] : suf) {
    if (s >= opts.min_support) cands.push_back({false, text::encode_utf8(a), s});
  }
  std::sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
    if (x.support != y.support) return x.support > y.support;
    if (x.prefix != y.prefix) return x.prefix;
    return x.text < y.text;
  });
  if (cands.size() > opts.top_k) cands.resize(opts.top_k);
  AffixList out;
  for (const auto& c : cands) (c.prefix ? out.prefixes : out.suffixes).push_back({c.text, c.support});
  return out;
}

Vocab::Vocab(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  for (std::size_t i = 0; i < kSpecials.size(); ++i) {
    if (i >= tokens_.size() || tokens_[i] != kSpecials[i]) throw InvalidInput("vocabulary must start with " + kSpecials[i]);
  }
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i].empty()) throw InvalidInput("empty token at id " + std::to_string(i));
    if (!ids_.emplace(tokens_[i], static_cast<int>(i)).second) {
      throw InvalidInput("duplicate token '" + tokens_[i] + "' at id " + std::to_string(i));
    }
  }
}

int Vocab::id(const std::string& token) const {
  const auto it = ids_.find(token);
  return it == ids_.end() ? -1 : it->second;
}

const std::string& Vocab::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw RangeError("token id " + std::to_string(id) + " outside vocabulary of " + std::to_string(tokens_.size()));
  }
  return tokens_[static_cast<std::size_t>(id)];
}

void Vocab::encode_word(const std::string& word, std::vector<int>& out) const {
  const auto chars = chars_of(word);
  if (chars.size() > kMaxWordChars) {
    out.push_back(kUnkId);
    return;
  }
  std::vector<int> pieces;
  std::size_t start = 0;
  while (start < chars.size()) {
    int found = -1;
    std::size_t end = chars.size();
    for (; end > start; --end) {
      std::string sub = start > 0 ? std::string(kContinuation) : std::string();
      for (std::size_t k = start; k < end; ++k) sub += chars[k];
      found = id(sub);
      if (found >= 0) break;
    }
    if (found < 0) {
      out.push_back(kUnkId);
      return;
    }
    pieces.push_back(found);
    start = end;
  }
  out.insert(out.end(), pieces.begin(), pieces.end());
}

std::vector<int> Vocab::encode(std::string_view text) const {
  std::vector<int> out;
  for (const auto& w : pretokenize(text)) encode_word(w, out);
  return out;
}

std::vector<std::string> Vocab::encode_tokens(std::string_view text) const {
  std::vector<std::string> out;
  for (int i : encode(text)) out.push_back(tokens_[static_cast<std::size_t>(i)]);
  return out;
}

std::string Vocab::decode(const std::vector<int>& ids) const {
  std::vector<std::string> words;
  for (int i : ids) {
    const auto& t = token(i);
    if (i == 0 || i == 2 || i == 3) continue;  // [PAD] [BOS] [EOS]
    if (t.size() > kContinuation.size() && t.rfind(kContinuation, 0) == 0 && !words.empty()) {
      words.back() += t.substr(kContinuation.size());
    } else {
      words.push_back(t);
    }
  }
  return render(words);
}

void Vocab::save(const std::filesystem::path& path) const {
  std::string body;
  for (const auto& t : tokens_) body += t + "\n";
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << body;
  }
  nlohmann::ordered_json meta;
  meta["format"] = "wordpiece-vocab-v1";
  meta["vocab_size"] = tokens_.size();
  meta["continuation_prefix"] = kContinuation;
  meta["specials"] = kSpecials;
  meta["lowercase"] = true;
  meta["split_punctuation"] = true;
  meta["sha256"] = sha256_hex(body);
  std::ofstream out(sidecar(path), std::ios::binary);
  if (!out) throw IoError("cannot write " + sidecar(path).string());
  out << meta.dump(2) << "\n";
}

Vocab Vocab::load(const std::filesystem::path& path) {
  const auto body = read_file(path);
  if (std::filesystem::exists(sidecar(path))) {
    nlohmann::json meta;
    try {
      meta = nlohmann::json::parse(read_file(sidecar(path)));
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError("vocabulary sidecar " + sidecar(path).string() + ": " + e.what());
    }
    if (meta.value("sha256", std::string()) != sha256_hex(body)) {
      throw ParseError("vocabulary " + path.string() + " does not match the hash in its sidecar");
    }
  }
  std::vector<std::string> tokens;
  std::size_t pos = 0;
  while (pos < body.size()) {
    auto nl = body.find('\n', pos);
    if (nl == std::string::npos) nl = body.size();
    tokens.push_back(body.substr(pos, nl - pos));
    pos = nl + 1;
  }
  return Vocab(std::move(tokens));
}

std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) throw Error("SHA-256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

// ---- training

namespace {

using u128 = unsigned __int128;

struct Trainer {
  std::vector<std::string> sym;  // symbol id -> token
  std::unordered_map<std::string, int> sym_id;
  std::vector<std::int64_t> sym_freq;
  std::vector<std::vector<int>> words;
  std::vector<std::int64_t> word_freq;
  std::unordered_map<std::uint64_t, std::int64_t> pair_count;
  std::unordered_map<std::uint64_t, std::vector<int>> pair_words;

  static std::uint64_t key(int a, int b) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) | static_cast<std::uint32_t>(b);
  }

  int intern(const std::string& t) {
    auto [it, inserted] = sym_id.emplace(t, static_cast<int>(sym.size()));
    if (inserted) {
      sym.push_back(t);
      sym_freq.push_back(0);
    }
    return it->second;
  }

  void add_pairs(int w, std::int64_t sign, int only_with = -1) {
    const auto& s = words[static_cast<std::size_t>(w)];
    const auto f = word_freq[static_cast<std::size_t>(w)] * sign;
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
      const auto k = key(s[i], s[i + 1]);
      auto& c = pair_count[k];
      c += f;
      if (c == 0) pair_count.erase(k);
      if (sign > 0 && (only_with < 0 || s[i] == only_with || s[i + 1] == only_with)) pair_words[k].push_back(w);
    }
  }

  // True when (a, b) beats (c, d).
  bool better(std::uint64_t k1, std::int64_t n1, std::uint64_t k2, std::int64_t n2) const {
    const int a = static_cast<int>(k1 >> 32), b = static_cast<int>(k1 & 0xffffffffu);
    const int c = static_cast<int>(k2 >> 32), d = static_cast<int>(k2 & 0xffffffffu);
    const u128 lhs = static_cast<u128>(n1) * static_cast<u128>(sym_freq[c]) * static_cast<u128>(sym_freq[d]);
    const u128 rhs = static_cast<u128>(n2) * static_cast<u128>(sym_freq[a]) * static_cast<u128>(sym_freq[b]);
    if (lhs != rhs) return lhs > rhs;
    if (sym[a] != sym[c]) return sym[a] < sym[c];
    return sym[b] < sym[d];
  }

  void merge(int a, int b, int merged, std::vector<int>& stamp, int round) {
    const auto k = key(a, b);
    const auto list = pair_words[k];
    for (int w : list) {
      if (stamp[static_cast<std::size_t>(w)] == round) continue;
      stamp[static_cast<std::size_t>(w)] = round;
      auto& s = words[static_cast<std::size_t>(w)];
      bool has = false;
      for (std::size_t i = 0; i + 1 < s.size(); ++i) has = has || (s[i] == a && s[i + 1] == b);
      if (!has) continue;
      add_pairs(w, -1);
      const auto f = word_freq[static_cast<std::size_t>(w)];
      std::vector<int> next;
      next.reserve(s.size());
      for (std::size_t i = 0; i < s.size();) {
        if (i + 1 < s.size() && s[i] == a && s[i + 1] == b) {
          next.push_back(merged);
          sym_freq[static_cast<std::size_t>(a)] -= f;
          sym_freq[static_cast<std::size_t>(b)] -= f;
          sym_freq[static_cast<std::size_t>(merged)] += f;
          i += 2;
        } else {
          next.push_back(s[i]);
          ++i;
        }
      }
      s = std::move(next);
      add_pairs(w, +1, merged);
    }
    pair_words.erase(k);
  }
};

}  // namespace

Vocab train_wordpiece(const std::vector<std::string>& corpus, std::size_t vocab_size, const AffixList& affixes,
                      TrainStats* stats) {
  std::map<std::string, std::int64_t> counts;
  for (const auto& doc : corpus) {
    for (auto& t : pretokenize(doc)) ++counts[t];
  }
  if (counts.empty()) throw InvalidInput("cannot train a tokenizer on an empty corpus");

  std::vector<std::string> vocab(kSpecials);
  std::unordered_set<std::string> in_vocab(vocab.begin(), vocab.end());
  auto add = [&](const std::string& t) {
    if (in_vocab.insert(t).second) {
      vocab.push_back(t);
      return true;
    }
    return false;
  };

  std::set<std::string> alphabet;
  for (const auto& [w, c] : counts) {
    for (auto& ch : chars_of(w)) alphabet.insert(std::move(ch));
  }
  for (const auto& ch : alphabet) {
    add(ch);
    add(std::string(kContinuation) + ch);
  }
  const std::size_t alphabet_end = vocab.size();

  std::vector<std::vector<std::string>> prefix_chars, suffix_chars;
  for (const auto& p : affixes.prefixes) {
    if (p.text.empty()) continue;
    add(p.text);
    prefix_chars.push_back(chars_of(p.text));
  }
  for (const auto& s : affixes.suffixes) {
    if (s.text.empty()) continue;
    add(std::string(kContinuation) + s.text);
    suffix_chars.push_back(chars_of(s.text));
  }
  auto by_length = [](const std::vector<std::string>& x, const std::vector<std::string>& y) {
    if (x.size() != y.size()) return x.size() > y.size();
    return x < y;
  };
  std::sort(prefix_chars.begin(), prefix_chars.end(), by_length);
  std::sort(suffix_chars.begin(), suffix_chars.end(), by_length);

  const std::size_t minimum = vocab.size() + 1;
  if (vocab_size < minimum) {
    throw InvalidInput("vocab_size " + std::to_string(vocab_size) + " is too small; the minimum is " +
                       std::to_string(minimum));
  }
  if (stats) {
    stats->alphabet_size = alphabet_end - kSpecials.size();
    stats->seed_count = vocab.size() - alphabet_end;
  }

  Trainer tr;
  for (const auto& t : vocab) tr.intern(t);
  for (const auto& [w, c] : counts) {
    const auto ch = chars_of(w);
    std::size_t pre_len = 0, suf_len = 0;
    std::string pre_tok, suf_tok;
    for (const auto& p : prefix_chars) {
      if (ch.size() >= p.size() + kMinSeedStem && std::equal(p.begin(), p.end(), ch.begin())) {
        pre_len = p.size();
        for (const auto& x : p) pre_tok += x;
        break;
      }
    }
    for (const auto& s : suffix_chars) {
      if (ch.size() >= pre_len + s.size() + kMinSeedStem && std::equal(s.rbegin(), s.rend(), ch.rbegin())) {
        suf_len = s.size();
        suf_tok = std::string(kContinuation);
        for (const auto& x : s) suf_tok += x;
        break;
      }
    }
    std::vector<int> seq;
    if (pre_len) seq.push_back(tr.intern(pre_tok));
    for (std::size_t i = pre_len; i < ch.size() - suf_len; ++i) {
      seq.push_back(tr.intern(i == 0 ? ch[i] : std::string(kContinuation) + ch[i]));
    }
    if (suf_len) seq.push_back(tr.intern(suf_tok));
    for (int s : seq) tr.sym_freq[static_cast<std::size_t>(s)] += c;
    tr.words.push_back(std::move(seq));
    tr.word_freq.push_back(c);
  }
  for (int w = 0; w < static_cast<int>(tr.words.size()); ++w) tr.add_pairs(w, +1);

  std::vector<int> stamp(tr.words.size(), -1);
  std::size_t merges = 0;
  while (vocab.size() < vocab_size) {
    if (tr.pair_count.empty()) {
      throw InvalidInput("merges ran out at " + std::to_string(vocab.size()) + " tokens; the corpus cannot support " +
                         std::to_string(vocab_size));
    }
    auto best = tr.pair_count.begin();
    for (auto it = std::next(best); it != tr.pair_count.end(); ++it) {
      if (tr.better(it->first, it->second, best->first, best->second)) best = it;
    }
    const int a = static_cast<int>(best->first >> 32);
    const int b = static_cast<int>(best->first & 0xffffffffu);
    const auto merged_tok = tr.sym[static_cast<std::size_t>(a)] + strip_continuation(tr.sym[static_cast<std::size_t>(b)]);
    const int merged = tr.intern(merged_tok);
    tr.merge(a, b, merged, stamp, static_cast<int>(merges));
    add(merged_tok);
    ++merges;
  }
  if (stats) stats->merges = merges;
  return Vocab(std::move(vocab));
}

}  // namespace sstories::wordpiece
