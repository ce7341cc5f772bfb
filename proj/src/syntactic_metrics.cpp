#include "sstories/syntactic_metrics.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "sstories/errors.hpp"
#include "sstories/text.hpp"

namespace sstories::syntax {

namespace {

using TagSeq = std::vector<std::string>;

std::set<TagSeq> template_keys(const TemplateSet& templates) {
  std::set<TagSeq> keys;
  for (const auto& t : templates.templates) keys.insert(t.tags);
  return keys;
}

std::size_t occurrences(const TaggedStory& story, const std::set<TagSeq>& keys, std::size_t n) {
  if (story.tags.size() < n) return 0;
  std::size_t count = 0;
  TagSeq window(n);
  for (std::size_t i = 0; i + n <= story.tags.size(); ++i) {
    std::copy_n(story.tags.begin() + static_cast<std::ptrdiff_t>(i), n, window.begin());
    if (keys.count(window)) ++count;
  }
  return count;
}

void check_inputs(std::span<const TaggedStory> corpus, const TemplateSet& templates) {
  if (corpus.empty()) throw InvalidInput("template metrics of an empty corpus");
  if (templates.templates.empty()) throw InvalidInput("template set is empty");
}

}  // namespace

std::size_t TaggedStory::word_count() const {
  return static_cast<std::size_t>(
      std::count_if(tokens.begin(), tokens.end(), [](const std::string& t) { return text::is_word_token(t); }));
}

TaggedStory tag_story(const std::string& story, const pos::PosTagger& tagger) {
  TaggedStory t;
  t.tokens = text::tag_tokenize(story);
  t.tags = tagger.tag(t.tokens);
  return t;
}

std::vector<TaggedStory> tag_corpus(std::span<const std::string> texts, const pos::PosTagger& tagger) {
  std::vector<TaggedStory> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(tag_story(t, tagger));
  return out;
}

TemplateSet extract_templates(std::span<const TaggedStory> corpus, int n, std::size_t top_k) {
  if (n < 1) throw InvalidInput("template length must be at least 1");
  const auto un = static_cast<std::size_t>(n);
  std::map<TagSeq, std::size_t> counts;
  bool any = false;
  for (const auto& story : corpus) {
    if (story.tags.size() < un) continue;
    any = true;
    for (std::size_t i = 0; i + un <= story.tags.size(); ++i) {
      ++counts[TagSeq(story.tags.begin() + static_cast<std::ptrdiff_t>(i),
                      story.tags.begin() + static_cast<std::ptrdiff_t>(i + un))];
    }
  }
  if (!any) throw InvalidInput("no story has " + std::to_string(n) + " tagged tokens");
  std::vector<Template> all;
  all.reserve(counts.size());
  for (auto& [tags, c] : counts) all.push_back({tags, c});
  // counts is already in lexicographic order, so a stable sort on count
  // leaves ties lexicographic.
  std::stable_sort(all.begin(), all.end(), [](const Template& a, const Template& b) { return a.count > b.count; });
  if (all.size() > top_k) all.resize(top_k);
  TemplateSet set;
  set.n = n;
  set.templates = std::move(all);
  return set;
}

double template_rate(std::span<const TaggedStory> corpus, const TemplateSet& templates) {
  check_inputs(corpus, templates);
  const auto keys = template_keys(templates);
  std::size_t hit = 0;
  for (const auto& story : corpus) {
    if (occurrences(story, keys, static_cast<std::size_t>(templates.n)) > 0) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(corpus.size());
}

double templates_per_token(std::span<const TaggedStory> corpus, const TemplateSet& templates) {
  check_inputs(corpus, templates);
  const auto keys = template_keys(templates);
  std::size_t total = 0;
  std::size_t words = 0;
  for (const auto& story : corpus) {
    total += occurrences(story, keys, static_cast<std::size_t>(templates.n));
    words += story.word_count();
  }
  if (words == 0) throw InvalidInput("templates per token: corpus has no word tokens");
  return static_cast<double>(total) / static_cast<double>(words);
}

std::vector<double> template_story_fractions(std::span<const TaggedStory> corpus, const TemplateSet& templates) {
  check_inputs(corpus, templates);
  std::vector<double> out;
  const auto n = static_cast<std::size_t>(templates.n);
  for (const auto& t : templates.templates) {
    const std::set<TagSeq> one = {t.tags};
    std::size_t hit = 0;
    for (const auto& story : corpus) {
      if (occurrences(story, one, n) > 0) ++hit;
    }
    out.push_back(static_cast<double>(hit) / static_cast<double>(corpus.size()));
  }
  return out;
}

}  // namespace sstories::syntax
