#include <doctest.h>

#include <fstream>

#include "sstories/corpus.hpp"
#include "sstories/errors.hpp"
#include "test_util.hpp"

using namespace sstories;

namespace {

StoryRecord sample_record() {
  StoryRecord r;
  r.id = "s1-b00000-000";
  r.text = "Mia found a red ball. She was happy.";
  r.labels = {"Friendship", "bygone eras", "surreal", "a MacGuffin", std::nullopt, std::string("a child")};
  r.constraints = {"noun", 'm', 1, 24, "The End."};
  r.metrics = {8, 0.0, true};
  r.provenance = {"mock", "s1-b00000", 42, 0};
  return r;
}

void write_lines(const std::filesystem::path& p, const std::vector<std::string>& lines) {
  std::ofstream out(p);
  for (const auto& l : lines) out << l << "\n";
}

}  // namespace

TEST_CASE("default parameter space sizes") {
  const auto s = default_parameter_space();
  CHECK(s.themes.size() == 63);
  CHECK(s.topics.size() == 48);
  CHECK(s.styles.size() == 23);
  CHECK(s.narrative_features.size() == 26);
  CHECK(s.pos_options == std::vector<std::string>{"adjective", "adverb", "noun", "preposition"});
  CHECK(s.letter_frequencies.size() == 26);
  double total = 0;
  for (const auto& [c, w] : s.letter_frequencies) total += w;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
  CHECK_NOTHROW(s.validate());
}

TEST_CASE("parameter space json round trip") {
  const auto s = default_parameter_space();
  const auto back = parameter_space_from_json(to_json(s));
  CHECK(back.themes == s.themes);
  CHECK(back.name_list == s.name_list);
  CHECK(back.letter_frequencies == s.letter_frequencies);
}

TEST_CASE("story record json round trip keeps nulls for absent optional labels") {
  const auto r = sample_record();
  const auto j = to_json(r);
  CHECK(j["labels"]["grammar_feature"].is_null());
  CHECK(j["constraints"]["initial_letter"] == "m");
  CHECK(story_from_json(j) == r);
}

TEST_CASE("check_record catches invariant violations") {
  const auto space = default_parameter_space();
  auto r = sample_record();
  CHECK_FALSE(check_record(r, space).has_value());
  r.labels.theme = "Not a theme";
  CHECK(check_record(r, space).value().find("theme") != std::string::npos);
  r = sample_record();
  r.metrics.word_count = 3;
  CHECK(check_record(r, space).has_value());
  r = sample_record();
  r.constraints.paragraph_count = 10;
  CHECK(check_record(r, space).has_value());
}

TEST_CASE("load_corpus reports the failing line") {
  const auto dir = testutil::scratch("corpus");
  const auto good = to_json(sample_record()).dump();
  write_lines(dir / "bad.jsonl", {good, "{not json"});
  try {
    load_corpus(dir / "bad.jsonl");
    FAIL("expected CorpusError");
  } catch (const CorpusError& e) {
    CHECK(e.line() == 2);
  }
  write_lines(dir / "dup.jsonl", {good, "", good});
  CHECK_THROWS_AS(load_corpus(dir / "dup.jsonl"), CorpusError);
  CHECK_THROWS_AS(load_corpus(dir / "missing.jsonl"), IoError);
}

TEST_CASE("save and load corpus round trip") {
  const auto dir = testutil::scratch("corpus_rt");
  auto a = sample_record();
  auto b = sample_record();
  b.id = "s1-b00000-001";
  save_corpus({a, b}, dir / "c.jsonl");
  const auto back = load_corpus(dir / "c.jsonl");
  REQUIRE(back.size() == 2);
  CHECK(back[0] == a);
  CHECK(back[1] == b);
}

TEST_CASE("load_texts reads JSONL text fields and plain lines") {
  const auto dir = testutil::scratch("texts");
  write_lines(dir / "a.jsonl", {R"({"text": "one"})", R"({"story": "two"})", "", "three plain"});
  CHECK(load_texts(dir / "a.jsonl") == std::vector<std::string>{"one", "two", "three plain"});
  write_lines(dir / "b.jsonl", {R"({"other": 1})"});
  CHECK_THROWS_AS(load_texts(dir / "b.jsonl"), CorpusError);
}

TEST_CASE("fixtures load as valid corpora") {
  CHECK(load_corpus(testutil::data("fixture50.jsonl")).size() == 50);
  CHECK(load_corpus(testutil::data("fixture1000.jsonl")).size() == 1000);
}
