#pragma once
// Syntactic diversity: part-of-speech templates (the most frequent tag
// n-grams of a corpus), template rate and templates per token.

#include <span>
#include <string>
#include <vector>

#include "sstories/pos_tagger.hpp"

namespace sstories::syntax {

struct TaggedStory {
  std::vector<std::string> tokens;
  std::vector<std::string> tags;

  // Tokens that contain a letter or digit.
  std::size_t word_count() const;
};

TaggedStory tag_story(const std::string& text, const pos::PosTagger& tagger);
std::vector<TaggedStory> tag_corpus(std::span<const std::string> texts, const pos::PosTagger& tagger);

struct Template {
  std::vector<std::string> tags;
  std::size_t count = 0;
};

struct TemplateSet {
  int n = 6;
  std::vector<Template> templates;  // count descending, ties lexicographic
};

inline constexpr int kDefaultTemplateLength = 6;
inline constexpr std::size_t kDefaultTopK = 100;

// Counts every tag n-gram (sliding window) over all stories and keeps the
// top_k. Throws if no story has n tokens.
TemplateSet extract_templates(std::span<const TaggedStory> corpus, int n = kDefaultTemplateLength,
                              std::size_t top_k = kDefaultTopK);

// Fraction of stories containing at least one template.
double template_rate(std::span<const TaggedStory> corpus, const TemplateSet& templates);

// Template occurrences (overlapping windows count separately) divided by
// the total number of word tokens.
double templates_per_token(std::span<const TaggedStory> corpus, const TemplateSet& templates);

// Per template: fraction of stories containing it.
std::vector<double> template_story_fractions(std::span<const TaggedStory> corpus,
                                             const TemplateSet& templates);

}  // namespace sstories::syntax
