#pragma once
// WordPiece subword tokenizer: affix discovery, vocabulary training seeded
// with the discovered affixes, greedy longest-match encoding and decoding.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace sstories::wordpiece {

inline constexpr std::string_view kContinuation = "##";
inline const std::vector<std::string> kSpecials = {"[PAD]", "[UNK]", "[BOS]", "[EOS]"};
inline constexpr int kUnkId = 1;
inline constexpr int kDefaultVocabSize = 4096;

// Lowercase, split on whitespace, every punctuation character its own token.
std::vector<std::string> pretokenize(std::string_view text);
// Joins pretokens back into text. Closing punctuation attaches to the left,
// opening brackets to the right, apostrophes and hyphens to both sides, and
// straight double quotes alternate between opening and closing.
std::string render(const std::vector<std::string>& pretokens);
// render(pretokenize(text)); decode(encode(x)) equals this when every
// character of x was seen in training.
std::string normalize(std::string_view text);

struct Affix {
  std::string text;
  std::size_t support = 0;
};

struct AffixList {
  std::vector<Affix> prefixes;
  std::vector<Affix> suffixes;
};

struct AffixOptions {
  std::size_t min_support = 25;
  std::size_t max_affix_len = 4;
  std::size_t min_affix_len = 2;
  // Stems shorter than this do not count as support.
  std::size_t min_stem_len = 2;
  // Combined cap over prefixes and suffixes, by support.
  std::size_t top_k = 50;
};

// Support of suffix s = number of corpus word types w with w + s also a
// type; prefixes likewise. Sorted by support descending, then text.
AffixList discover_affixes(const std::vector<std::string>& corpus, const AffixOptions& opts = {});

class Vocab {
 public:
  Vocab() = default;
  explicit Vocab(std::vector<std::string> tokens);

  const std::vector<std::string>& tokens() const { return tokens_; }
  std::size_t size() const { return tokens_.size(); }
  // -1 when absent.
  int id(const std::string& token) const;
  bool contains(const std::string& token) const { return id(token) >= 0; }
  const std::string& token(int id) const;

  std::vector<int> encode(std::string_view text) const;
  std::vector<std::string> encode_tokens(std::string_view text) const;
  std::string decode(const std::vector<int>& ids) const;

  // One token per line; a sidecar "<path>.json" records settings and the
  // SHA-256 of the token file.
  void save(const std::filesystem::path& path) const;
  static Vocab load(const std::filesystem::path& path);

 private:
  void encode_word(const std::string& word, std::vector<int>& out) const;

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

struct TrainStats {
  std::size_t alphabet_size = 0;  // raw + continuation forms
  std::size_t seed_count = 0;     // affix seeds added
  std::size_t merges = 0;         // merges applied, including no-op ones
};

// Vocabulary order: specials, alphabet (each character raw then "##"),
// affix seeds, then merge results in merge order. Throws InvalidInput when
// vocab_size does not exceed the initial inventory (the minimum is named)
// and when merges run out before the size is reached.
Vocab train_wordpiece(const std::vector<std::string>& corpus, std::size_t vocab_size, const AffixList& affixes,
                      TrainStats* stats = nullptr);

std::string sha256_hex(std::string_view data);

}  // namespace sstories::wordpiece
