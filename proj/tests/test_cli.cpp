#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>

#include "test_util.hpp"

namespace fs = std::filesystem;

namespace {

// Runs the CLI with stdout and stderr sent to files in `dir`; returns the exit code.
int cli(const fs::path& dir, const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + "\"" + SSTORIES_CLI_PATH + "\" " + args + " > \"" +
                          (dir / "stdout.txt").string() + "\" 2> \"" + (dir / "stderr.txt").string() + "\"";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

nlohmann::json manifest(const fs::path& run) { return nlohmann::json::parse(testutil::slurp(run / "manifest.json")); }

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

}  // namespace

TEST_CASE("cli: generate with the mock model") {
  const auto dir = testutil::scratch("cli_generate");
  REQUIRE(cli(dir, "generate --mock --count 25 --seed 3 --run-dir " + q(dir / "a")) == 0);
  REQUIRE(cli(dir, "generate --mock --count 25 --seed 3 --run-dir " + q(dir / "b")) == 0);
  const auto stories = testutil::slurp(dir / "a" / "stories.jsonl");
  CHECK(stories == testutil::slurp(dir / "b" / "stories.jsonl"));
  CHECK(std::count(stories.begin(), stories.end(), '\n') == 25);
  const auto m = manifest(dir / "a");
  CHECK(m["status"] == "ok");
  CHECK(m["command"] == "generate");
  CHECK(m["seed"] == 3);
  CHECK(m["stories_written"] == 25);
  CHECK(m["outputs"].size() == 3);
  CHECK(fs::exists(dir / "a" / "validation.json"));
  CHECK(fs::exists(dir / "a" / "cost.json"));
}

TEST_CASE("cli: run directory naming") {
  const auto dir = testutil::scratch("cli_rundir");
  REQUIRE(cli(dir, "generate --mock --count 0 --seed 7 --timestamp 86400 --out " + q(dir)) == 0);
  CHECK(fs::exists(dir / "19700102T000000Z-s7" / "manifest.json"));
  // a second run with the same name gets a suffix
  REQUIRE(cli(dir, "generate --mock --count 0 --seed 7 --timestamp 86400 --out " + q(dir)) == 0);
  CHECK(fs::exists(dir / "19700102T000000Z-s7-2" / "manifest.json"));
}

TEST_CASE("cli: failures exit nonzero") {
  const auto dir = testutil::scratch("cli_fail");
  CHECK(cli(dir, "analyze " + q(dir / "missing.jsonl")) != 0);
  CHECK(cli(dir, "no-such-command") != 0);
  CHECK(cli(dir, "generate --mock --count -3") != 0);

  std::ofstream(dir / "bad.json") << "{ not json";
  CHECK(cli(dir, "generate --mock --count 1 --config " + q(dir / "bad.json") + " --run-dir " + q(dir / "badcfg")) != 0);
  CHECK(manifest(dir / "badcfg")["status"] == "failed");

  // no key set
  std::ofstream(dir / "nokey.json") << R"({"backend": {"api_key_env": "SSTORIES_TEST_UNSET_KEY"}})";
  CHECK(cli(dir, "generate --count 1 --config " + q(dir / "nokey.json") + " --run-dir " + q(dir / "nokey"),
            "env -u SSTORIES_TEST_UNSET_KEY") != 0);
  CHECK(manifest(dir / "nokey")["status"] == "failed");

  // unreachable endpoint: the run fails and says so
  std::ofstream(dir / "dead.json") << R"({"backend": {"base_url": "http://127.0.0.1:9", "api_key_env": "SSTORIES_TEST_KEY", "timeout_s": 2},
    "client": {"max_retries": 1, "retry_base_delay_ms": 1, "retry_max_delay_ms": 2}})";
  CHECK(cli(dir, "generate --count 3 --config " + q(dir / "dead.json") + " --run-dir " + q(dir / "dead"),
            "SSTORIES_TEST_KEY=x") != 0);
  const auto m = manifest(dir / "dead");
  CHECK(m["status"] == "failed");
  CHECK(m["error"].get<std::string>().find("backend failed") != std::string::npos);
  CHECK(fs::exists(dir / "dead" / "stories.jsonl"));
}

TEST_CASE("cli: analyze, report and compare") {
  const auto dir = testutil::scratch("cli_analyze");
  const auto corpus = testutil::data("fixture50.jsonl");
  const std::string opts = " --ngram-n 4 --sample-size 20 --template-n 3 --tables 3";
  REQUIRE(cli(dir, "analyze " + q(corpus) + opts + " --run-dir " + q(dir / "a")) == 0);
  REQUIRE(cli(dir, "analyze " + q(corpus) + opts + " --seed 1 --subsample 0.5 --run-dir " + q(dir / "b")) == 0);
  for (const char* f : {"analysis.json", "ngrams_3.csv", "zipf.csv", "ngd.csv", "report.txt", "manifest.json"}) {
    CAPTURE(f);
    CHECK(fs::exists(dir / "a" / f));
  }
  const auto m = manifest(dir / "a");
  CHECK(m["inputs"].contains(corpus.string()));

  REQUIRE(cli(dir, "report " + q(dir / "a" / "analysis.json")) == 0);
  CHECK(testutil::slurp(dir / "stdout.txt").find("stories analyzed: 50 of 50") != std::string::npos);

  // different seeds and subsample settings cannot be compared
  CHECK(cli(dir, "compare " + q(dir / "a" / "analysis.json") + " " + q(dir / "b" / "analysis.json") + " --run-dir " +
                 q(dir / "c")) != 0);
  REQUIRE(cli(dir, "compare " + q(dir / "a" / "analysis.json") + " " + q(dir / "a" / "analysis.json") +
                       " --name-a x --name-b y --run-dir " + q(dir / "d")) == 0);
  CHECK(fs::exists(dir / "d" / "comparison.json"));
}

TEST_CASE("cli: tokenize train, encode, decode") {
  const auto dir = testutil::scratch("cli_tokenize");
  REQUIRE(cli(dir, "tokenize train " + q(testutil::data("fixture50.jsonl")) + " --vocab-size 400 --run-dir " +
                       q(dir / "t")) == 0);
  CHECK(testutil::slurp(dir / "t" / "vocab.txt") == testutil::slurp(testutil::data("fixture50_vocab400.txt")));
  CHECK(fs::exists(dir / "t" / "affixes.json"));

  REQUIRE(cli(dir, "tokenize encode --vocab " + q(dir / "t" / "vocab.txt") + " \"The cat sat.\"") == 0);
  auto ids = testutil::slurp(dir / "stdout.txt");
  while (!ids.empty() && ids.back() == '\n') ids.pop_back();
  CHECK_FALSE(ids.empty());
  REQUIRE(cli(dir, "tokenize decode --vocab " + q(dir / "t" / "vocab.txt") + " \"" + ids + "\"") == 0);
  CHECK(testutil::slurp(dir / "stdout.txt") == "the cat sat.\n");
  CHECK(cli(dir, "tokenize decode --vocab " + q(dir / "t" / "vocab.txt") + " \"1 x 2\"") != 0);
}

TEST_CASE("cli: mock judge") {
  const auto dir = testutil::scratch("cli_judge");
  const auto corpus = q(testutil::data("fixture50.jsonl"));
  REQUIRE(cli(dir, "judge " + corpus + " " + corpus + " --names a b --mode story-eval --n 10 --mock --run-dir " +
                       q(dir / "j")) == 0);
  const auto scores = nlohmann::json::parse(testutil::slurp(dir / "j" / "judge_scores.json"));
  CHECK(scores["kind"] == "judge-scores");
  CHECK(fs::exists(dir / "j" / "summary.json"));
  CHECK(fs::exists(dir / "j" / "scores.csv"));
  // the distribution interval is sqrt(n) times wider than the mean interval
  REQUIRE(cli(dir, "judge " + corpus + " " + corpus + " --names a b --mode story-eval --n 10 --mock --interval distribution --run-dir " +
                       q(dir / "jd")) == 0);
  const auto sm = nlohmann::json::parse(testutil::slurp(dir / "j" / "summary.json"))["metrics"]["quality"]["groups"]["a"];
  const auto sd = nlohmann::json::parse(testutil::slurp(dir / "jd" / "summary.json"))["metrics"]["quality"]["groups"]["a"];
  const double wm = sm["ci_high"].get<double>() - sm["ci_low"].get<double>();
  const double wd = sd["ci_high"].get<double>() - sd["ci_low"].get<double>();
  CHECK(wd == doctest::Approx(wm * std::sqrt(10.0)));
  CHECK(cli(dir, "judge " + corpus + " --mode nonsense --mock --run-dir " + q(dir / "bad")) != 0);
  CHECK(cli(dir, "judge " + corpus + " " + corpus + " --names a --mock --run-dir " + q(dir / "bad2")) != 0);
}
