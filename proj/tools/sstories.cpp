// sstories: generate, analyze, compare, judge, tokenize, report.
//
// Every command writes its outputs into a run directory (default
// runs/<UTC time>-s<seed>) together with a manifest.json.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sstories/corpus.hpp"
#include "sstories/errors.hpp"
#include "sstories/judge.hpp"
#include "sstories/llm_client.hpp"
#include "sstories/pipeline.hpp"
#include "sstories/pos_tagger.hpp"
#include "sstories/prompt.hpp"
#include "sstories/text.hpp"
#include "sstories/wordpiece.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;
using namespace sstories;

namespace {

constexpr const char* kDefaultBaseUrl = "https://api.openai.com/v1";
constexpr const char* kDefaultKeyEnv = "OPENAI_API_KEY";

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open " + p.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const fs::path& p, const std::string& data) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("cannot write " + p.string());
  out << data;
  if (!out) throw IoError("write failed for " + p.string());
}

json read_json(const fs::path& p) {
  try {
    return json::parse(read_file(p));
  } catch (const json::parse_error& e) {
    throw ParseError(p.string() + ": " + e.what());
  }
}

std::string utc_string(std::int64_t t, const char* fmt) {
  const std::time_t tt = static_cast<std::time_t>(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[64];
  std::strftime(buf, sizeof buf, fmt, &tm);
  return buf;
}

std::int64_t now_seconds() {
  return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch()).count();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Settings shared by every command.
struct Common {
  std::string out_base = "runs";
  std::string run_dir;
  std::uint64_t seed = 0;
  std::optional<std::int64_t> timestamp;
  std::string config_path;
};

void add_common(CLI::App* cmd, Common& c, bool with_config) {
  cmd->add_option("--out", c.out_base, "parent directory for run directories")->capture_default_str();
  cmd->add_option("--run-dir", c.run_dir, "write outputs here instead of a new run directory");
  cmd->add_option("--seed", c.seed, "random seed")->capture_default_str();
  cmd->add_option("--timestamp", c.timestamp, "UTC seconds used for the run directory and record provenance");
  if (with_config) cmd->add_option("--config", c.config_path, "JSON config file");
}

// The one config schema:
// {
//   "sampler":  {"grammar_feature_prob", "persona_prob", "K", "delimiter", "name_list"},
//   "sampling": {"model", "top_p", "temperature", "max_tokens"},
//   "client":   {"requests_per_minute", "max_concurrency", "max_retries",
//                "retry_base_delay_ms", "retry_max_delay_ms"},
//   "backend":  {"base_url", "api_key_env", "timeout_s"},
//   "judge":    {"model", "temperature", "top_p", "max_tokens"},
//   "parameter_space": <path or inline object>
// }
struct Config {
  json raw = json::object();
  SamplerConfig sampler;
  llm::SamplingConfig sampling;
  llm::SamplingConfig judge_sampling;
  llm::ClientConfig client;
  std::string base_url = kDefaultBaseUrl;
  std::string api_key_env = kDefaultKeyEnv;
  int timeout_s = 120;
  ParameterSpace space = default_parameter_space();
};

llm::SamplingConfig sampling_from_json(const json& j, llm::SamplingConfig c) {
  c.model_name = j.value("model", c.model_name);
  c.top_p = j.value("top_p", c.top_p);
  c.temperature = j.value("temperature", c.temperature);
  c.max_tokens = j.value("max_tokens", c.max_tokens);
  c.validate();
  return c;
}

Config load_config(const std::string& path) {
  Config c;
  if (path.empty()) return c;
  c.raw = read_json(path);
  if (!c.raw.is_object()) throw InvalidInput("config must be a JSON object");
  try {
    if (c.raw.contains("sampler")) c.sampler = sampler_config_from_json(c.raw["sampler"]);
    if (c.raw.contains("sampling")) c.sampling = sampling_from_json(c.raw["sampling"], c.sampling);
    c.judge_sampling = c.sampling;
    if (c.raw.contains("judge")) c.judge_sampling = sampling_from_json(c.raw["judge"], c.judge_sampling);
    if (c.raw.contains("client")) c.client = llm::client_config_from_json(c.raw["client"]);
    if (c.raw.contains("backend")) {
      const auto& b = c.raw["backend"];
      c.base_url = b.value("base_url", c.base_url);
      c.api_key_env = b.value("api_key_env", c.api_key_env);
      c.timeout_s = b.value("timeout_s", c.timeout_s);
    }
    if (c.raw.contains("parameter_space")) {
      const auto& ps = c.raw["parameter_space"];
      if (ps.is_string()) {
        fs::path p = ps.get<std::string>();
        if (p.is_relative()) p = fs::path(path).parent_path() / p;
        c.space = load_parameter_space(p);
      } else {
        c.space = parameter_space_from_json(ps);
      }
    }
  } catch (const json::exception& e) {
    throw InvalidInput("config " + path + ": " + e.what());
  }
  return c;
}

std::shared_ptr<llm::Backend> live_backend(const Config& cfg) {
  const char* key = std::getenv(cfg.api_key_env.c_str());
  if (key == nullptr || *key == '\0') {
    throw InvalidInput("no API key: set " + cfg.api_key_env + " (or pass --mock)");
  }
  return std::make_shared<llm::HttpBackend>(cfg.base_url, key, std::chrono::seconds(cfg.timeout_s));
}

// Run directory plus manifest bookkeeping.
class Run {
 public:
  Run(std::string command, const Common& c) : command_(std::move(command)), start_(now_seconds()) {
    if (!c.run_dir.empty()) {
      dir_ = c.run_dir;
    } else {
      const auto stamp = utc_string(c.timestamp.value_or(start_), "%Y%m%dT%H%M%SZ");
      const fs::path base = fs::path(c.out_base) / (stamp + "-s" + std::to_string(c.seed));
      dir_ = base;
      for (int k = 2; fs::exists(dir_); ++k) dir_ = base.string() + "-" + std::to_string(k);
    }
    fs::create_directories(dir_);
    manifest_["command"] = command_;
    manifest_["tool_version"] = kToolVersion;
    manifest_["seed"] = c.seed;
    manifest_["config"] = json::object();
    manifest_["inputs"] = json::object();
    manifest_["outputs"] = json::array();
  }

  const fs::path& dir() const { return dir_; }
  ordered_json& manifest() { return manifest_; }

  void input(const fs::path& p) { manifest_["inputs"][p.string()] = wordpiece::sha256_hex(read_file(p)); }

  void output(const std::string& name, const std::string& data) {
    write_file(dir_ / name, data);
    manifest_["outputs"].push_back((dir_ / name).string());
  }

  void config(const ordered_json& snapshot) { manifest_["config"] = snapshot; }

  // Writes manifest.json; returns the process exit code.
  int finish(const std::optional<std::string>& error) {
    const auto end = now_seconds();
    manifest_["started_at"] = utc_string(start_, "%Y-%m-%dT%H:%M:%SZ");
    manifest_["finished_at"] = utc_string(end, "%Y-%m-%dT%H:%M:%SZ");
    manifest_["status"] = error ? "failed" : "ok";
    if (error) manifest_["error"] = *error;
    write_file(dir_ / "manifest.json", manifest_.dump(2) + "\n");
    if (error) {
      std::cerr << "sstories " << command_ << ": " << *error << "\n";
      std::cerr << "partial outputs in " << dir_.string() << "\n";
      return 1;
    }
    std::cout << dir_.string() << "\n";
    return 0;
  }

 private:
  std::string command_;
  std::int64_t start_;
  fs::path dir_;
  ordered_json manifest_;
};

// Wraps a command body so that any failure still leaves a manifest behind.
template <typename F>
int run_command(const std::string& name, const Common& c, F&& body) {
  std::optional<Run> run;
  try {
    run.emplace(name, c);
    body(*run);
    return run->finish(std::nullopt);
  } catch (const std::exception& e) {
    if (run) return run->finish(std::string(e.what()));
    std::cerr << "sstories " << name << ": " << e.what() << "\n";
    return 1;
  }
}

// ---- generate

struct GenerateArgs {
  Common common;
  std::size_t count = 100;
  bool mock = false;
};

int cmd_generate(const GenerateArgs& a) {
  return run_command("generate", a.common, [&](Run& run) {
    if (!a.common.config_path.empty()) run.input(a.common.config_path);
    const auto cfg = load_config(a.common.config_path);
    GenerateOptions opts;
    opts.count = a.count;
    opts.seed = a.common.seed;
    opts.space = cfg.space;
    opts.sampler = cfg.sampler;
    opts.sampling = cfg.sampling;
    if (a.mock) opts.sampling.model_name = "mock";
    // Mock runs default to timestamp 0 so the corpus depends on the seed only.
    opts.timestamp = a.common.timestamp.value_or(a.mock ? 0 : now_seconds());
    opts.tagger = &pos::PosTagger::default_tagger();

    ordered_json snap;
    snap["count"] = a.count;
    snap["mock"] = a.mock;
    snap["timestamp"] = opts.timestamp;
    snap["sampler"] = to_json(opts.sampler);
    snap["sampling"] = {{"model", opts.sampling.model_name},
                        {"top_p", opts.sampling.top_p},
                        {"temperature", opts.sampling.temperature},
                        {"max_tokens", opts.sampling.max_tokens}};
    snap["client"] = {{"requests_per_minute", cfg.client.requests_per_minute},
                      {"max_concurrency", cfg.client.max_concurrency},
                      {"max_retries", cfg.client.retry.max_retries}};
    if (!a.mock) snap["backend"] = {{"base_url", cfg.base_url}, {"api_key_env", cfg.api_key_env}};
    snap["parameter_space"] = to_json(opts.space);
    run.config(snap);

    std::shared_ptr<llm::Backend> backend;
    if (a.mock) {
      backend = std::make_shared<llm::MockBackend>();
    } else {
      backend = live_backend(cfg);
    }
    llm::Client client(backend, cfg.client);
    const auto result = generate(client, opts);

    std::string jsonl;
    for (const auto& r : result.stories) jsonl += to_json(r).dump() + "\n";
    run.output("stories.jsonl", jsonl);
    run.output("validation.json", validation_json(result).dump(2) + "\n");
    run.output("cost.json", cost_json(result, opts.sampling.model_name, llm::default_price_table()).dump(2) + "\n");
    run.manifest()["stories_written"] = result.stories.size();
    if (result.error) throw Error("backend failed after " + std::to_string(result.stories.size()) + " stories: " + *result.error);
    if (result.stories.size() < a.count) {
      throw Error("only " + std::to_string(result.stories.size()) + " of " + std::to_string(a.count) +
                  " stories passed validation");
    }
  });
}

// ---- analyze

struct AnalyzeArgs {
  Common common;
  std::string corpus;
  int ngram_n = 10;
  double subsample = 1.0;
  std::size_t sample_size = 1000;
  int bleu_max_n = 4;
  bool no_syntactic = false;
  int template_n = 6;
  std::size_t template_k = 100;
  std::vector<int> table_ns = {3, 4, 5};
  std::size_t table_rows = 20;
  std::string tagger_path;
};

int cmd_analyze(const AnalyzeArgs& a) {
  return run_command("analyze", a.common, [&](Run& run) {
    run.input(a.corpus);
    AnalyzeOptions opts;
    opts.lexical.max_ngd_n = a.ngram_n;
    opts.lexical.bleu_max_n = a.bleu_max_n;
    opts.lexical.sample_size = a.sample_size;
    opts.lexical.seed = a.common.seed;
    opts.subsample = a.subsample;
    opts.syntactic = !a.no_syntactic;
    opts.template_n = a.template_n;
    opts.template_k = a.template_k;
    opts.table_ns = a.table_ns;
    opts.table_rows = a.table_rows;

    std::optional<pos::PosTagger> custom;
    const pos::PosTagger* tagger = nullptr;
    if (opts.syntactic) {
      if (!a.tagger_path.empty()) {
        run.input(a.tagger_path);
        custom = pos::PosTagger::load(a.tagger_path);
        tagger = &*custom;
      } else {
        tagger = &pos::PosTagger::default_tagger();
      }
    }
    const auto texts = load_texts(a.corpus);
    const auto report = analyze_corpus(texts, opts, tagger);
    run.config(report["settings"]);
    run.output("analysis.json", report.dump(2) + "\n");

    const auto& lex = report["lexical"];
    for (const auto& [n, rows] : lex["ngram_tables"].items()) {
      std::string csv = "rank,ngram,fraction\n";
      std::size_t rank = 0;
      for (const auto& row : rows) {
        csv += std::to_string(++rank) + "," + csv_field(row["ngram"].get<std::string>()) + "," +
               num(row["story_fraction"].get<double>()) + "\n";
      }
      run.output("ngrams_" + n + ".csv", csv);
    }
    std::string zipf = "rank,fraction\n";
    for (const auto& row : lex["zipf"]) {
      zipf += std::to_string(row["rank"].get<std::size_t>()) + "," + num(row["fraction"].get<double>()) + "\n";
    }
    run.output("zipf.csv", zipf);
    std::string ngd = "n,ngd\n";
    for (const auto& [n, v] : lex["ngd"].items()) ngd += n + "," + num(v.get<double>()) + "\n";
    run.output("ngd.csv", ngd);
    run.output("report.txt", render_report(report));
  });
}

// ---- compare

struct CompareArgs {
  Common common;
  std::string a, b;
  std::string name_a = "A", name_b = "B";
};

int cmd_compare(const CompareArgs& a) {
  return run_command("compare", a.common, [&](Run& run) {
    run.input(a.a);
    run.input(a.b);
    run.config({{"names", {a.name_a, a.name_b}}});
    const auto cmp = compare_reports(read_json(a.a), read_json(a.b), a.name_a, a.name_b);
    run.output("comparison.json", cmp.dump(2) + "\n");
    if (cmp.contains("ngd_curve")) {
      std::string csv = "n," + csv_field(a.name_a) + "," + csv_field(a.name_b) + "\n";
      for (const auto& row : cmp["ngd_curve"]) {
        auto cell = [](const json& v) { return v.is_number() ? num(v.get<double>()) : std::string(); };
        csv += std::to_string(row["n"].get<int>()) + "," + cell(row[a.name_a]) + "," + cell(row[a.name_b]) + "\n";
      }
      run.output("ngd_curve.csv", csv);
    }
    if (cmp.contains("zipf")) {
      std::string csv = "rank," + csv_field(a.name_a) + "," + csv_field(a.name_b) + "\n";
      for (const auto& row : cmp["zipf"]) {
        auto cell = [](const json& v) { return v.is_number() ? std::to_string(v.get<std::size_t>()) : std::string(); };
        csv += std::to_string(row["rank"].get<std::size_t>()) + "," + cell(row[a.name_a]) + "," + cell(row[a.name_b]) + "\n";
      }
      run.output("zipf.csv", csv);
    }
  });
}

// ---- judge

struct JudgeArgs {
  Common common;
  std::vector<std::string> corpora;
  std::vector<std::string> names;
  std::string mode = "diversity";
  std::size_t n = 200;
  bool mock = false;
  std::string interval = "mean";
};

std::vector<judge::JudgeStory> load_judge_stories(const fs::path& p, const ParameterSpace& space, bool need_labels) {
  std::vector<judge::JudgeStory> out;
  if (need_labels) {
    for (auto& r : load_corpus(p, space)) out.push_back({r.id, r.text, r.labels});
    return out;
  }
  // Prefer record ids when the file is a story corpus.
  try {
    for (auto& r : load_corpus(p, space)) out.push_back({r.id, r.text, r.labels});
    return out;
  } catch (const Error&) {
    out.clear();
  }
  const auto texts = load_texts(p);
  for (std::size_t i = 0; i < texts.size(); ++i) out.push_back({"line-" + std::to_string(i + 1), texts[i], {}});
  return out;
}

int cmd_judge(const JudgeArgs& a) {
  return run_command("judge", a.common, [&](Run& run) {
    if (a.mode != "diversity" && a.mode != "story-eval" && a.mode != "label-recovery") {
      throw InvalidInput("--mode must be diversity, story-eval or label-recovery");
    }
    if (!a.names.empty() && a.names.size() != a.corpora.size()) {
      throw InvalidInput("--names needs one name per corpus");
    }
    if (!a.common.config_path.empty()) run.input(a.common.config_path);
    const auto cfg = load_config(a.common.config_path);
    auto sampling = cfg.judge_sampling;
    if (a.mock) sampling.model_name = "mock";
    run.config({{"mode", a.mode}, {"n", a.n}, {"mock", a.mock}, {"model", sampling.model_name}});

    std::shared_ptr<llm::Backend> backend;
    if (a.mock) {
      backend = std::make_shared<judge::MockJudgeBackend>();
    } else {
      backend = live_backend(cfg);
    }
    llm::Client client(backend, cfg.client);
    const judge::RunOptions ro{a.n, a.common.seed};

    std::map<std::string, std::map<std::string, std::vector<double>>> by_metric;  // metric -> group -> scores
    ordered_json scores_doc;
    scores_doc["kind"] = "judge-scores";
    scores_doc["mode"] = a.mode;
    scores_doc["model"] = sampling.model_name;
    scores_doc["groups"] = ordered_json::object();
    ordered_json all_units = ordered_json::array();
    ordered_json label_summaries = ordered_json::object();
    std::string csv;
    if (a.mode == "diversity") csv = "group,unit,story_ids,simplicity,diversity_style,diversity_content\n";
    if (a.mode == "story-eval") csv = "group,story_id,originality,coherence,grammar,quality\n";
    if (a.mode == "label-recovery") csv = "group,story_id,axis,truth,predicted,correct\n";

    for (std::size_t c = 0; c < a.corpora.size(); ++c) {
      const auto& path = a.corpora[c];
      run.input(path);
      const std::string group = a.names.empty() ? fs::path(path).stem().string() : a.names[c];
      if (scores_doc["groups"].contains(group)) throw InvalidInput("duplicate group name '" + group + "'");
      const auto stories = load_judge_stories(path, cfg.space, a.mode == "label-recovery");
      ordered_json units = ordered_json::array();
      ordered_json dropped = ordered_json::array();
      auto add_dropped = [&](const std::vector<judge::Dropped>& ds) {
        for (const auto& d : ds) dropped.push_back({{"unit", d.unit}, {"reason", d.reason}});
      };
      if (a.mode == "diversity") {
        const auto r = judge::run_diversity(client, sampling, stories, ro);
        add_dropped(r.dropped);
        for (std::size_t u = 0; u < r.results.size(); ++u) {
          const auto& d = r.results[u];
          std::string ids;
          for (const auto& id : d.story_ids) ids += (ids.empty() ? "" : " ") + id;
          units.push_back({{"story_ids", d.story_ids},
                           {"simplicity", d.simplicity},
                           {"diversity_style", d.diversity_style},
                           {"diversity_content", d.diversity_content},
                           {"explanation", d.explanation}});
          by_metric["simplicity"][group].push_back(d.simplicity);
          by_metric["diversity_style"][group].push_back(d.diversity_style);
          by_metric["diversity_content"][group].push_back(d.diversity_content);
          csv += csv_field(group) + "," + std::to_string(u) + "," + csv_field(ids) + "," + std::to_string(d.simplicity) +
                 "," + std::to_string(d.diversity_style) + "," + std::to_string(d.diversity_content) + "\n";
        }
      } else if (a.mode == "story-eval") {
        const auto r = judge::run_story_eval(client, sampling, stories, ro);
        add_dropped(r.dropped);
        for (const auto& s : r.results) {
          units.push_back({{"story_id", s.story_id},
                           {"originality", s.originality},
                           {"coherence", s.coherence},
                           {"grammar", s.grammar},
                           {"quality", s.quality},
                           {"explanation", s.explanation}});
          by_metric["originality"][group].push_back(s.originality);
          by_metric["coherence"][group].push_back(s.coherence);
          by_metric["grammar"][group].push_back(s.grammar);
          by_metric["quality"][group].push_back(s.quality);
          csv += csv_field(group) + "," + csv_field(s.story_id) + "," + std::to_string(s.originality) + "," +
                 std::to_string(s.coherence) + "," + std::to_string(s.grammar) + "," + std::to_string(s.quality) + "\n";
        }
      } else {
        const auto r = judge::run_label_recovery(client, sampling, stories, cfg.space, ro);
        add_dropped(r.dropped);
        for (const auto& l : r.results) {
          ordered_json unit = {{"story_id", l.story_id}};
          for (const auto& [axis, truth] : l.truth) {
            const auto it = l.predicted.find(axis);
            const std::string pred = it == l.predicted.end() ? "" : it->second;
            const bool ok = !pred.empty() && text::to_lower(pred) == text::to_lower(truth);
            unit[axis] = ok ? 1 : 0;
            csv += csv_field(group) + "," + csv_field(l.story_id) + "," + axis + "," + csv_field(truth) + "," +
                   csv_field(pred) + "," + (ok ? "1" : "0") + "\n";
          }
          units.push_back(unit);
        }
        label_summaries[group] = judge::to_json(judge::summarize_label_recovery(r.results, cfg.space));
      }
      for (const auto& u : units) all_units.push_back(u);
      scores_doc["groups"][group] = {{"corpus", path}, {"units", units}, {"dropped", dropped}};
    }
    // compare reads the flat unit list.
    scores_doc["units"] = all_units;

    ordered_json summary;
    summary["mode"] = a.mode;
    summary["n"] = a.n;
    summary["ci_level"] = judge::kCiLevel;
    summary["interval"] = a.interval;
    if (a.mode == "label-recovery") {
      summary["axes"] = label_summaries;
    } else {
      // "distribution" gives mean +- z*s instead of mean +- z*s/sqrt(n)
      const auto kind = a.interval == "distribution" ? stats::IntervalKind::kDistribution : stats::IntervalKind::kMean;
      for (const auto& [metric, groups] : by_metric) {
        summary["metrics"][metric] = judge::to_json(judge::summarize_metric(groups, judge::kCiLevel, kind));
      }
    }
    ordered_json dropped_counts = ordered_json::object();
    for (const auto& [g, v] : scores_doc["groups"].items()) dropped_counts[g] = v["dropped"].size();
    summary["dropped"] = dropped_counts;
    run.output("scores.csv", csv);
    run.output("judge_scores.json", scores_doc.dump(2) + "\n");
    run.output("summary.json", summary.dump(2) + "\n");
  });
}

// ---- tokenize

struct TokenizeArgs {
  Common common;
  std::string corpus;
  std::size_t vocab_size = wordpiece::kDefaultVocabSize;
  std::string vocab;
  std::string input;
  std::vector<std::string> text;
};

int cmd_tokenize_train(const TokenizeArgs& a) {
  return run_command("tokenize train", a.common, [&](Run& run) {
    run.input(a.corpus);
    run.config({{"vocab_size", a.vocab_size}});
    const auto texts = load_texts(a.corpus);
    const auto affixes = wordpiece::discover_affixes(texts);
    wordpiece::TrainStats st;
    const auto vocab = wordpiece::train_wordpiece(texts, a.vocab_size, affixes, &st);
    vocab.save(run.dir() / "vocab.txt");
    run.manifest()["outputs"].push_back((run.dir() / "vocab.txt").string());
    run.manifest()["outputs"].push_back((run.dir() / "vocab.txt.json").string());
    ordered_json aj;
    for (const auto* side : {&affixes.prefixes, &affixes.suffixes}) {
      ordered_json arr = ordered_json::array();
      for (const auto& x : *side) arr.push_back({{"text", x.text}, {"support", x.support}});
      aj[side == &affixes.prefixes ? "prefixes" : "suffixes"] = arr;
    }
    aj["alphabet_size"] = st.alphabet_size;
    aj["seed_count"] = st.seed_count;
    aj["merges"] = st.merges;
    run.output("affixes.json", aj.dump(2) + "\n");
  });
}

std::vector<std::string> tokenize_inputs(const TokenizeArgs& a) {
  if (!a.input.empty()) {
    std::vector<std::string> lines;
    std::ifstream in(a.input);
    if (!in) throw IoError("cannot open " + a.input);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
  }
  if (!a.text.empty()) return a.text;
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(std::cin, line)) lines.push_back(line);
  return lines;
}

// encode/decode stream to stdout; they write no run directory.
int cmd_tokenize_encode(const TokenizeArgs& a) {
  try {
    const auto vocab = wordpiece::Vocab::load(a.vocab);
    for (const auto& line : tokenize_inputs(a)) {
      const auto ids = vocab.encode(line);
      std::string out;
      for (std::size_t i = 0; i < ids.size(); ++i) out += (i ? " " : "") + std::to_string(ids[i]);
      std::cout << out << "\n";
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "sstories tokenize encode: " << e.what() << "\n";
    return 1;
  }
}

int cmd_tokenize_decode(const TokenizeArgs& a) {
  try {
    const auto vocab = wordpiece::Vocab::load(a.vocab);
    for (const auto& line : tokenize_inputs(a)) {
      std::vector<int> ids;
      std::istringstream in(line);
      std::string tok;
      while (in >> tok) {
        try {
          ids.push_back(std::stoi(tok));
        } catch (const std::exception&) {
          throw ParseError("not a token id: '" + tok + "'");
        }
      }
      std::cout << vocab.decode(ids) << "\n";
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "sstories tokenize decode: " << e.what() << "\n";
    return 1;
  }
}

// ---- report

int cmd_report(const std::string& path) {
  try {
    const auto j = read_json(path);
    if (j.value("kind", std::string()) != "analysis") throw InvalidInput(path + " is not an analysis report");
    std::cout << render_report(j);
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "sstories report: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SimpleStories corpus toolkit"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "generate a labeled story corpus");
  add_common(g, gen.common, true);
  g->add_option("--count", gen.count, "stories to keep")->capture_default_str();
  g->add_flag("--mock", gen.mock, "use the offline mock model");

  AnalyzeArgs an;
  auto* a = app.add_subcommand("analyze", "lexical and syntactic diversity of a corpus");
  add_common(a, an.common, false);
  a->add_option("corpus", an.corpus, "JSONL with a text field, or one story per line")->required()->check(CLI::ExistingFile);
  a->add_option("--ngram-n", an.ngram_n, "largest n for n-gram diversity")->capture_default_str();
  a->add_option("--subsample", an.subsample, "fraction of stories analyzed")->capture_default_str();
  a->add_option("--sample-size", an.sample_size, "stories used for compression ratio and Self-BLEU")->capture_default_str();
  a->add_option("--bleu-max-n", an.bleu_max_n)->capture_default_str();
  a->add_flag("--no-syntactic", an.no_syntactic, "skip POS templates");
  a->add_option("--template-n", an.template_n)->capture_default_str();
  a->add_option("--template-k", an.template_k)->capture_default_str();
  a->add_option("--tables", an.table_ns, "n-gram table sizes")->capture_default_str();
  a->add_option("--table-rows", an.table_rows)->capture_default_str();
  a->add_option("--tagger", an.tagger_path, "tagger weights file");

  CompareArgs cmp;
  auto* c = app.add_subcommand("compare", "compare two analysis reports or two judge score files");
  add_common(c, cmp.common, false);
  c->add_option("a", cmp.a)->required()->check(CLI::ExistingFile);
  c->add_option("b", cmp.b)->required()->check(CLI::ExistingFile);
  c->add_option("--name-a", cmp.name_a)->capture_default_str();
  c->add_option("--name-b", cmp.name_b)->capture_default_str();

  JudgeArgs jd;
  auto* j = app.add_subcommand("judge", "score stories with a model judge");
  add_common(j, jd.common, true);
  j->add_option("corpora", jd.corpora, "one or more corpora; each is a group")->required()->check(CLI::ExistingFile);
  j->add_option("--names", jd.names, "group names, one per corpus");
  j->add_option("--mode", jd.mode, "diversity | story-eval | label-recovery")
      ->check(CLI::IsMember({"diversity", "story-eval", "label-recovery"}))
      ->capture_default_str();
  j->add_option("--n", jd.n, "judged units per corpus")->capture_default_str();
  j->add_flag("--mock", jd.mock, "use the offline mock judge");
  j->add_option("--interval", jd.interval, "confidence interval: mean (z*s/sqrt(n)) or distribution (z*s)")
      ->check(CLI::IsMember({"mean", "distribution"}))
      ->capture_default_str();

  TokenizeArgs tk;
  auto* t = app.add_subcommand("tokenize", "WordPiece tokenizer");
  t->require_subcommand(1);
  auto* tt = t->add_subcommand("train", "train a vocabulary");
  add_common(tt, tk.common, false);
  tt->add_option("corpus", tk.corpus)->required()->check(CLI::ExistingFile);
  tt->add_option("--vocab-size", tk.vocab_size)->capture_default_str();
  auto* te = t->add_subcommand("encode", "text lines to token ids");
  te->add_option("--vocab", tk.vocab)->required()->check(CLI::ExistingFile);
  te->add_option("--input", tk.input, "file with one text per line (default: stdin)");
  te->add_option("text", tk.text, "texts to encode");
  auto* td = t->add_subcommand("decode", "token id lines to text");
  td->add_option("--vocab", tk.vocab)->required()->check(CLI::ExistingFile);
  td->add_option("--input", tk.input, "file with one id sequence per line (default: stdin)");
  td->add_option("ids", tk.text, "id sequences to decode");

  std::string report_path;
  auto* r = app.add_subcommand("report", "print an analysis report as text");
  r->add_option("analysis", report_path)->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  if (g->parsed()) return cmd_generate(gen);
  if (a->parsed()) return cmd_analyze(an);
  if (c->parsed()) return cmd_compare(cmp);
  if (j->parsed()) return cmd_judge(jd);
  if (tt->parsed()) return cmd_tokenize_train(tk);
  if (te->parsed()) return cmd_tokenize_encode(tk);
  if (td->parsed()) return cmd_tokenize_decode(tk);
  if (r->parsed()) return cmd_report(report_path);
  return 1;
}
