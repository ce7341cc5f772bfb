#include <doctest.h>

#include <set>

#include "sstories/corpus.hpp"
#include "sstories/errors.hpp"
#include "sstories/prompt.hpp"

using namespace sstories;

namespace {

GenerationParams appendix_params() {
  GenerationParams p;
  p.theme = "Responsibility";
  p.topic = "secret societies";
  p.style = "lyric";
  p.narrative_feature = "inner monologue";
  p.grammar_feature = "progressive aspect";
  p.author_persona = "someone curious";
  p.paragraph_count = 2;
  p.stories_per_completion = 12;
  p.initial_pos = "noun";
  p.initial_letter = 'p';
  return p;
}

}  // namespace

TEST_CASE("render_prompt reproduces the published template") {
  auto space = default_parameter_space();
  space.name_list = {"Mia", "Leo"};
  const std::string expected =
      "Write 12 short stories (2 paragraphs each) using very basic words. Do not number each story or write a "
      "headline. Make the stories diverse by fully exploring the theme, but each story should be self-contained. "
      "Separate the stories by putting \xE2\x80\x9CThe End.\xE2\x80\x9D in between. Make the stories as "
      "qualitatively distinct to each other as possible. In particular, never start two stories the same way! "
      "Each story should be about Responsibility, include secret societies, be lyric in its writing style and "
      "ideally feature inner monologue. The most important thing is to write an engaging easy story, but where it "
      "makes sense, demonstrate the use of progressive aspect. Write from the perspective of someone curious. If "
      "you need to use proper names, make them from space-separated common words. Either don't give characters a "
      "name, or select from Mia, Leo. Complex story structure is great, but please remember to only use very "
      "simple words! If you can, start the story with a noun that begins with the letter p.";
  CHECK(render_prompt(appendix_params(), space) == expected);
}

TEST_CASE("render_prompt omits absent optional sentences and picks the article") {
  auto p = appendix_params();
  p.grammar_feature.reset();
  p.author_persona.reset();
  p.initial_pos = "adverb";
  const auto s = render_prompt(p, default_parameter_space());
  CHECK(s.find("demonstrate the use of") == std::string::npos);
  CHECK(s.find("perspective") == std::string::npos);
  CHECK(s.find("start the story with an adverb that begins") != std::string::npos);
}

TEST_CASE("stories_for_paragraphs is inversely proportional") {
  CHECK(stories_for_paragraphs(1) == 24);
  CHECK(stories_for_paragraphs(2) == 12);
  CHECK(stories_for_paragraphs(5) == 5);  // 4.8 rounds to 5
  CHECK(stories_for_paragraphs(7) == 3);
  CHECK(stories_for_paragraphs(9) == 3);
  CHECK(stories_for_paragraphs(9, 2) == 1);
  CHECK_THROWS_AS(stories_for_paragraphs(0), InvalidInput);
}

TEST_CASE("sample_params is deterministic and draws valid options") {
  const auto space = default_parameter_space();
  const SamplerConfig cfg;
  CHECK(sample_params(space, cfg, 7) == sample_params(space, cfg, 7));
  std::set<int> paragraphs;
  int grammar = 0, persona = 0;
  const int n = 4000;
  for (int s = 0; s < n; ++s) {
    const auto p = sample_params(space, cfg, static_cast<std::uint64_t>(s));
    paragraphs.insert(p.paragraph_count);
    grammar += p.grammar_feature.has_value();
    persona += p.author_persona.has_value();
    CHECK(p.initial_letter >= 'a');
    CHECK(p.initial_letter <= 'z');
    CHECK(p.stories_per_completion == stories_for_paragraphs(p.paragraph_count));
  }
  CHECK(paragraphs == std::set<int>{1, 2, 3, 4, 5, 6, 7, 8, 9});
  // 4 sigma bands around 0.5 and 0.33
  CHECK(std::abs(grammar / double(n) - 0.5) < 0.032);
  CHECK(std::abs(persona / double(n) - 0.33) < 0.030);
}

TEST_CASE("slot overrides change only the optional slots") {
  const auto space = default_parameter_space();
  const SamplerConfig cfg;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto free = sample_params(space, cfg, s);
    const auto forced = sample_params(space, cfg, s, {true, false});
    CHECK(forced.grammar_feature.has_value());
    CHECK_FALSE(forced.author_persona.has_value());
    CHECK(forced.theme == free.theme);
    CHECK(forced.initial_letter == free.initial_letter);
    CHECK(forced.paragraph_count == free.paragraph_count);
    if (free.grammar_feature) CHECK(*forced.grammar_feature == *free.grammar_feature);
  }
}

TEST_CASE("probability 0 and 1 are honoured") {
  const auto space = default_parameter_space();
  SamplerConfig cfg;
  cfg.grammar_feature_prob = 0.0;
  cfg.persona_prob = 1.0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto p = sample_params(space, cfg, s);
    CHECK_FALSE(p.grammar_feature.has_value());
    CHECK(p.author_persona.has_value());
  }
}

TEST_CASE("sampler config validation and json") {
  SamplerConfig cfg;
  cfg.grammar_feature_prob = 1.5;
  CHECK_THROWS_AS(cfg.validate(), InvalidInput);
  const auto c = sampler_config_from_json(nlohmann::json{{"K", 12}, {"delimiter", "Fin."}});
  CHECK(c.k == 12);
  CHECK(c.delimiter == "Fin.");
  CHECK_THROWS_AS(sampler_config_from_json(nlohmann::json{{"persona_prob", -1}}), InvalidInput);
  CHECK_THROWS_AS(sampler_config_from_json(nlohmann::json{{"K", "many"}}), InvalidInput);
}

TEST_CASE("split_completion handles quotes, whitespace and truncation") {
  const auto r = split_completion("First story.\n\nThe End.\n\nSecond story. \xE2\x80\x9CThe End.\xE2\x80\x9D", "The End.");
  REQUIRE(r.stories.size() == 2);
  CHECK(r.stories[0] == "First story.");
  CHECK(r.stories[1] == "Second story.");
  CHECK_FALSE(r.last_possibly_truncated);
  const auto t = split_completion("A. The End. B is cut of", "The End.");
  CHECK(t.stories == std::vector<std::string>{"A.", "B is cut of"});
  CHECK(t.last_possibly_truncated);
  const auto e = split_completion("The End. The End. ... ", "The End.");
  CHECK(e.stories.empty());
  CHECK_FALSE(e.last_possibly_truncated);
  CHECK_THROWS_AS(split_completion("x", ""), InvalidInput);
}

TEST_CASE("attach_labels builds records with ids, labels and metrics") {
  const auto p = appendix_params();
  const auto recs = attach_labels({"Pigs fly. The sky is blue.", "Plums are sweet."}, p,
                                  {"s1-b00003", "mock", 5, "en"}, true);
  REQUIRE(recs.size() == 2);
  CHECK(recs[0].id == "s1-b00003-000");
  CHECK(recs[1].id == "s1-b00003-001");
  CHECK(recs[0].labels.grammar_feature == std::optional<std::string>("progressive aspect"));
  CHECK(recs[0].constraints.initial_letter == 'p');
  CHECK(recs[0].metrics.word_count == 6);
  CHECK_FALSE(recs[0].possibly_truncated);
  CHECK(recs[1].possibly_truncated);
  CHECK(recs[1].provenance.timestamp == 5);
}
