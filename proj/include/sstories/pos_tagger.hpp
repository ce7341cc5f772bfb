#pragma once
// Averaged-perceptron part-of-speech tagger over the Penn Treebank tagset.
//
// Weights are trained offline (tools/train_tagger) and shipped as a JSON
// file that also carries the word lexicon used as a feature source.
// Closed-class words and punctuation are tagged from a fixed table that
// always overrides the model.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace sstories::pos {

struct TaggedSentence {
  std::vector<std::string> tokens;
  std::vector<std::string> tags;
};

// Reads "word/TAG word/TAG ..." lines; '#' starts a comment line. The tag is
// taken after the last '/'.
std::vector<TaggedSentence> read_tagged_file(const std::filesystem::path& path);
TaggedSentence parse_tagged_line(const std::string& line);

// Tag forced for closed-class words and punctuation, if any.
std::optional<std::string> closed_class_tag(const std::string& token);

struct TrainOptions {
  int iterations = 10;
  std::uint64_t seed = 1;
};

class PosTagger {
 public:
  PosTagger() = default;

  static PosTagger load(const std::filesystem::path& weights_file);
  // The tagger shipped in the data directory.
  static const PosTagger& default_tagger();
  static std::filesystem::path default_weights_path();

  static PosTagger train(const std::vector<TaggedSentence>& sentences,
                         std::unordered_map<std::string, std::string> lexicon,
                         const TrainOptions& options);

  void save(const std::filesystem::path& weights_file) const;

  // Output has the same length as the input.
  std::vector<std::string> tag(std::span<const std::string> tokens) const;

  const std::vector<std::string>& tags() const { return tags_; }

 private:
  using Weights = std::unordered_map<std::string, std::vector<double>>;

  std::vector<std::string> features(std::span<const std::string> tokens, std::size_t i,
                                    const std::string& prev, const std::string& prev2) const;
  std::size_t predict(const std::vector<std::string>& feats) const;
  std::optional<std::string> lexicon_tag(const std::string& token) const;
  bool is_unknown(const std::string& token) const;
  std::optional<std::string> rule_tag(std::span<const std::string> tokens, std::size_t i,
                                      int& quote_parity) const;

  std::vector<std::string> tags_;
  Weights weights_;
  std::unordered_map<std::string, std::string> lexicon_;
  std::unordered_set<std::string> known_words_;  // lowercase training vocabulary
};

// Penn tag -> coarse class used by the initial-word constraint
// (adjective, adverb, noun, preposition), or nullopt.
std::optional<std::string> coarse_class(const std::string& penn_tag);

}  // namespace sstories::pos
