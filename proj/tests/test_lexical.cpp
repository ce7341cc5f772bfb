#include <doctest.h>

#include <algorithm>
#include <set>

#include "sstories/corpus.hpp"
#include "sstories/errors.hpp"
#include "sstories/lexical_metrics.hpp"
#include "test_util.hpp"

using namespace sstories;
using namespace sstories::lexical;

namespace {

std::vector<std::string> fixture_texts() {
  std::vector<std::string> out;
  for (const auto& r : load_corpus(testutil::data("fixture50.jsonl"))) out.push_back(r.text);
  return out;
}

Tokens toks(const std::string& s) {
  Tokens t;
  std::string cur;
  for (char c : s + " ") {
    if (c == ' ') {
      if (!cur.empty()) t.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  return t;
}

NgramEntry entry(const std::string& words, double frac) {
  NgramEntry e;
  e.ngram = toks(words);
  e.story_fraction = frac;
  return e;
}

}  // namespace

TEST_CASE("tokenized fixture matches the reference word counts") {
  const auto texts = fixture_texts();
  const auto corpus = tokenize_corpus(texts);
  const auto& want = testutil::oracle()["word_counts"];
  REQUIRE(corpus.size() == want.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) CHECK(corpus[i].size() == want[i].get<std::size_t>());
}

TEST_CASE("n-gram diversity matches brute force") {
  const auto corpus = tokenize_corpus(fixture_texts());
  for (int n = 1; n <= 10; ++n) {
    const auto& want = testutil::oracle()["ngd"][std::to_string(n)];
    const auto d = ngram_diversity_detail(corpus, n);
    CHECK(d.distinct == want["distinct"].get<std::size_t>());
    CHECK(d.total == want["total"].get<std::size_t>());
    CHECK(d.score == doctest::Approx(static_cast<double>(d.distinct) / d.total).epsilon(1e-15));
    CHECK(ngram_diversity(corpus, n) == d.score);
    CHECK(ngram_diversity_story_mean(corpus, n) == doctest::Approx(want["story_mean"].get<double>()).epsilon(1e-12));
  }
}

TEST_CASE("n-gram diversity edge cases") {
  const TokenizedCorpus c = {toks("a b a b"), toks("a")};
  const auto d = ngram_diversity_detail(c, 2);
  CHECK(d.distinct == 2);  // (a b), (b a)
  CHECK(d.total == 3);
  CHECK(d.stories_used == 1);
  CHECK(d.stories_skipped == 1);
  CHECK(ngram_diversity(c, 1) == doctest::Approx(2.0 / 5.0));
  CHECK_THROWS_AS(ngram_diversity(c, 5), InvalidInput);
  CHECK_THROWS_AS(ngram_diversity(c, 0), InvalidInput);
  CHECK_THROWS_AS(ngram_diversity({}, 1), InvalidInput);
}

TEST_CASE("compression matches zlib level 6 reference") {
  const auto texts = fixture_texts();
  std::string joined;
  for (std::size_t i = 0; i < texts.size(); ++i) joined += (i ? "\n" : "") + texts[i];
  const auto& want = testutil::oracle()["compression"];
  CHECK(joined.size() == want["original"].get<std::size_t>());
  CHECK(compressed_size(joined) == want["compressed"].get<std::size_t>());
  CHECK(compression_ratio(texts) ==
        doctest::Approx(want["original"].get<double>() / want["compressed"].get<double>()).epsilon(1e-15));
  // repetitive text compresses far better
  const std::vector<std::string> rep(50, "The cat sat on the mat.");
  CHECK(compression_ratio(rep) > compression_ratio(texts));
  CHECK_THROWS_AS(compression_ratio(std::vector<std::string>{}), InvalidInput);
}

TEST_CASE("BLEU hand cases") {
  const std::vector<Tokens> same = {toks("the cat sat on the mat")};
  CHECK(bleu(toks("the cat sat on the mat"), same, 4) == doctest::Approx(1.0));
  // no shared bigram -> 0 without smoothing
  CHECK(bleu(toks("mat the on sat cat"), same, 4) == 0.0);
  // unigram only: 3/4 clipped ("the" twice in candidate, twice in ref), bp = exp(1 - 6/4)
  const double p1 = 3.0 / 4.0;
  CHECK(bleu(toks("the the dog mat"), same, 1) == doctest::Approx(std::exp(1.0 - 6.0 / 4.0) * p1));
  // orders cap at candidate length: single word
  CHECK(bleu(toks("cat"), std::vector<Tokens>{toks("cat")}, 4) == doctest::Approx(1.0));
  // closest reference length wins, shorter on ties
  const std::vector<Tokens> refs = {toks("a b c d e"), toks("a b c")};
  CHECK(bleu(toks("a b c d"), refs, 2) == doctest::Approx(1.0));
  // both two away: the shorter reference gives no brevity penalty
  const std::vector<Tokens> tie = {toks("a b c d e f"), toks("a b")};
  CHECK(bleu(toks("a b c d"), tie, 1) == doctest::Approx(1.0));
  CHECK(bleu(toks("a b x y"), std::vector<Tokens>{toks("a b"), toks("a b c d e f")}, 1) == doctest::Approx(0.5));
  CHECK_THROWS_AS(bleu({}, same, 4), InvalidInput);
  CHECK_THROWS_AS(bleu(toks("a"), {}, 4), InvalidInput);
}

TEST_CASE("Self-BLEU matches brute force to 1e-12") {
  const auto corpus = tokenize_corpus(fixture_texts());
  const auto& want = testutil::oracle()["self_bleu"];
  const auto per = self_bleu_scores(corpus, 4);
  REQUIRE(per.size() == want["per_story"].size());
  for (std::size_t i = 0; i < per.size(); ++i) {
    CHECK(std::abs(per[i] - want["per_story"][i].get<double>()) < 1e-12);
  }
  CHECK(std::abs(self_bleu(corpus, 4) - want["mean"].get<double>()) < 1e-12);
  CHECK_THROWS_AS(self_bleu({toks("one story")}, 4), InvalidInput);
}

TEST_CASE("4-gram story fractions: top 10 matches reference") {
  const auto corpus = tokenize_corpus(fixture_texts());
  const auto t = ngram_story_fractions(corpus, 4);
  CHECK(t.n == 4);
  const auto& want = testutil::oracle()["fourgram_top10"];
  REQUIRE(t.entries.size() >= 10);
  for (std::size_t i = 0; i < 10; ++i) {
    std::string joined;
    for (const auto& w : t.entries[i].ngram) joined += (joined.empty() ? "" : " ") + w;
    CHECK(joined == want[i]["ngram"].get<std::string>());
    CHECK(t.entries[i].story_count == want[i]["stories"].get<std::size_t>());
    CHECK(t.entries[i].story_fraction == doctest::Approx(want[i]["stories"].get<double>() / corpus.size()));
  }
  for (std::size_t i = 1; i < t.entries.size(); ++i) {
    CHECK(t.entries[i - 1].story_fraction >= t.entries[i].story_fraction);
  }
}

TEST_CASE("story fraction counts a story once") {
  const TokenizedCorpus c = {toks("a b a b a b"), toks("a b"), toks("c d")};
  const auto t = ngram_story_fractions(c, 2);
  REQUIRE(t.entries.size() == 3);
  CHECK(t.entries[0].ngram == toks("a b"));
  CHECK(t.entries[0].story_count == 2);
  CHECK(t.entries[0].story_fraction == doctest::Approx(2.0 / 3.0));
  // ties are lexicographic
  CHECK(t.entries[1].ngram == toks("b a"));
  CHECK(t.entries[2].ngram == toks("c d"));
}

TEST_CASE("overlap counts a multiset intersection") {
  CHECK(overlap_words(toks("a b c"), toks("c d e")) == 1);
  CHECK(overlap_words(toks("a a b"), toks("a b b")) == 2);
  CHECK(overlap_words(toks("a a a"), toks("a")) == 1);
  CHECK(overlap_words(toks("x y"), toks("z w")) == 0);
}

TEST_CASE("greedy overlap filter") {
  SUBCASE("trigrams allow one shared word") {
    NgramTable t;
    t.n = 3;
    t.entries = {entry("the cat sat", .9), entry("the dog ran", .8), entry("a cat sat", .7), entry("on the mat", .6),
                 entry("big red ball", .5)};
    const auto f = greedy_overlap_filter(t);
    std::vector<std::string> kept;
    for (const auto& e : f.entries) kept.push_back(e.ngram[1]);
    // "a cat sat" shares two with "the cat sat"; "on the mat" shares one
    CHECK(kept == std::vector<std::string>{"cat", "dog", "the", "red"});
  }
  SUBCASE("bigrams share nothing") {
    NgramTable t;
    t.n = 2;
    t.entries = {entry("the cat", .5), entry("the dog", .4), entry("a dog", .3), entry("a bird", .2)};
    const auto f = greedy_overlap_filter(t);
    REQUIRE(f.entries.size() == 2);
    CHECK(f.entries[0].ngram == toks("the cat"));
    CHECK(f.entries[1].ngram == toks("a dog"));
  }
  SUBCASE("limit stops the scan") {
    NgramTable t;
    t.n = 1;
    t.entries = {entry("a", .5), entry("b", .4), entry("a", .3), entry("c", .2)};
    CHECK(greedy_overlap_filter(t, 2).entries.size() == 2);
    CHECK(greedy_overlap_filter(t).entries.size() == 3);
  }
}

TEST_CASE("subsampling is seeded, sorted and without replacement") {
  const auto a = subsample_indices(1000, 100, 7);
  CHECK(a == subsample_indices(1000, 100, 7));
  CHECK(a != subsample_indices(1000, 100, 8));
  CHECK(a.size() == 100);
  CHECK(std::is_sorted(a.begin(), a.end()));
  CHECK(std::set<std::size_t>(a.begin(), a.end()).size() == 100);
  CHECK(a.back() < 1000);
  CHECK(subsample_indices(10, 50, 1).size() == 10);
  CHECK(fraction_to_count(1000, 0.1) == 100);
  CHECK(fraction_to_count(1000, 1.0) == 1000);
  CHECK_THROWS_AS(fraction_to_count(10, 0.0), InvalidInput);
  CHECK_THROWS_AS(fraction_to_count(10, 1.5), InvalidInput);
}

TEST_CASE("diversity report") {
  const auto texts = fixture_texts();
  DiversityOptions opt;
  opt.max_ngd_n = 4;
  opt.sample_size = 1000;
  const auto r = diversity_report(texts, opt);
  CHECK(r.ngd.size() == 4);
  CHECK(r.corpus_size == 50);
  CHECK(r.sample_size == 50);
  CHECK(std::abs(r.self_bleu - testutil::oracle()["self_bleu"]["mean"].get<double>()) < 1e-12);
  CHECK(r.self_bleu_per_story.size() == 50);
  opt.sample_size = 20;
  const auto s = diversity_report(texts, opt);
  CHECK(s.sample_size == 20);
  CHECK(s.ngd == r.ngd);  // NGD always uses the whole corpus
}
