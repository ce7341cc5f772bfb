#include <doctest.h>

#include <algorithm>
#include <map>

#include "sstories/corpus.hpp"
#include "sstories/errors.hpp"
#include "sstories/syntactic_metrics.hpp"
#include "test_util.hpp"

using namespace sstories;
using namespace sstories::syntax;

namespace {

TaggedStory story(const std::string& tags) {
  TaggedStory s;
  std::string cur;
  for (char c : tags + " ") {
    if (c == ' ') {
      if (!cur.empty()) {
        s.tags.push_back(cur);
        s.tokens.push_back(cur == "." ? "." : "w");
      }
      cur.clear();
    } else {
      cur += c;
    }
  }
  return s;
}

// Slow versions over joined strings, for comparison.
struct Brute {
  std::vector<std::pair<std::string, std::size_t>> top;
  double rate = 0.0;
  double per_token = 0.0;
};

Brute brute(const std::vector<TaggedStory>& corpus, int n, std::size_t k) {
  std::map<std::string, std::size_t> counts;
  std::vector<std::vector<std::string>> windows;
  std::size_t words = 0;
  for (const auto& s : corpus) {
    std::vector<std::string> w;
    for (std::size_t i = 0; i + n <= s.tags.size(); ++i) {
      std::string key;
      for (int j = 0; j < n; ++j) key += s.tags[i + j] + " ";
      ++counts[key];
      w.push_back(key);
    }
    windows.push_back(w);
    words += s.word_count();
  }
  std::vector<std::pair<std::string, std::size_t>> all(counts.begin(), counts.end());
  std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  if (all.size() > k) all.resize(k);
  Brute b;
  b.top = all;
  std::size_t hit = 0, occ = 0;
  for (const auto& w : windows) {
    bool any = false;
    for (const auto& key : w) {
      for (const auto& [t, c] : all) {
        if (t == key) {
          ++occ;
          any = true;
        }
      }
    }
    hit += any;
  }
  b.rate = static_cast<double>(hit) / corpus.size();
  b.per_token = static_cast<double>(occ) / words;
  return b;
}

std::string key_of(const Template& t) {
  std::string key;
  for (const auto& x : t.tags) key += x + " ";
  return key;
}

}  // namespace

TEST_CASE("word_count skips punctuation") {
  TaggedStory s;
  s.tokens = {"The", "cat", ",", "\"", "ran", "3", "."};
  s.tags = {"DT", "NN", ",", "``", "VBD", "CD", "."};
  CHECK(s.word_count() == 4);
}

TEST_CASE("hand-built template counts") {
  const std::vector<TaggedStory> c = {story("DT NN VBD DT NN ."), story("DT NN VBD ."), story("PRP VBD .")};
  const auto t = extract_templates(c, 3, 2);
  CHECK(t.n == 3);
  REQUIRE(t.templates.size() == 2);
  // DT NN VBD twice; then ties broken lexicographically
  CHECK(t.templates[0].tags == std::vector<std::string>{"DT", "NN", "VBD"});
  CHECK(t.templates[0].count == 2);
  CHECK(t.templates[1].tags == std::vector<std::string>{"DT", "NN", "."});
  CHECK(t.templates[1].count == 1);

  // story 1 and 2 contain DT NN VBD; story 1 also DT NN .
  CHECK(template_rate(c, t) == doctest::Approx(2.0 / 3.0));
  // occurrences: story1 DT NN VBD + DT NN . = 2, story2 1; word tokens 5+3+2 = 10
  CHECK(templates_per_token(c, t) == doctest::Approx(3.0 / 10.0));
  const auto fr = template_story_fractions(c, t);
  CHECK(fr[0] == doctest::Approx(2.0 / 3.0));
  CHECK(fr[1] == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("overlapping windows count separately") {
  const std::vector<TaggedStory> c = {story("NN NN NN NN")};
  const auto t = extract_templates(c, 2, 10);
  REQUIRE(t.templates.size() == 1);
  CHECK(t.templates[0].count == 3);
  CHECK(templates_per_token(c, t) == doctest::Approx(3.0 / 4.0));
  CHECK(template_rate(c, t) == 1.0);
}

TEST_CASE("errors") {
  const std::vector<TaggedStory> c = {story("DT NN")};
  CHECK_THROWS_AS(extract_templates(c, 3, 10), InvalidInput);
  CHECK_THROWS_AS(extract_templates(c, 0, 10), InvalidInput);
  CHECK_THROWS_AS(extract_templates({}, 2, 10), InvalidInput);
}

TEST_CASE("fixture templates match the brute force exactly") {
  std::vector<std::string> texts;
  for (const auto& r : load_corpus(testutil::data("fixture50.jsonl"))) texts.push_back(r.text);
  const auto tagged = tag_corpus(texts, pos::PosTagger::default_tagger());
  REQUIRE(tagged.size() == 50);
  for (const auto& s : tagged) CHECK(s.tokens.size() == s.tags.size());

  for (int n : {3, 6}) {
    const auto t = extract_templates(tagged, n, 100);
    const auto b = brute(tagged, n, 100);
    REQUIRE(t.templates.size() == b.top.size());
    for (std::size_t i = 0; i < t.templates.size(); ++i) {
      CHECK(key_of(t.templates[i]) == b.top[i].first);
      CHECK(t.templates[i].count == b.top[i].second);
    }
    CHECK(template_rate(tagged, t) == b.rate);
    CHECK(templates_per_token(tagged, t) == b.per_token);
  }
}

TEST_CASE("tag_story tokenizes and tags") {
  const auto s = tag_story("A little girl named Lily smiled.", pos::PosTagger::default_tagger());
  CHECK(s.tokens == std::vector<std::string>{"A", "little", "girl", "named", "Lily", "smiled", "."});
  CHECK(s.tags == std::vector<std::string>{"DT", "JJ", "NN", "VBN", "NNP", "VBD", "."});
  CHECK(s.word_count() == 6);
}
