#include "sstories/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <map>
#include <sstream>
#include <unordered_set>

#include "sstories/errors.hpp"
#include "sstories/judge.hpp"
#include "sstories/rng.hpp"
#include "sstories/stats.hpp"
#include "sstories/syntactic_metrics.hpp"
#include "sstories/text.hpp"

namespace sstories {

namespace {

constexpr double kGoldenStep = 0.6180339887498949;  // 1 / golden ratio
constexpr double kSilverStep = 0.41421356237309515;  // sqrt(2) - 1
constexpr std::uint64_t kSlotStream = 0xB47C4ED5ULL;

double frac(double x) { return x - std::floor(x); }

}  // namespace

SlotOverrides balanced_slots(std::uint64_t seed, std::size_t batch, const SamplerConfig& cfg) {
  Rng rng(derive_seed(seed, kSlotStream));
  const double g0 = uniform_unit(rng);
  const double p0 = uniform_unit(rng);
  const auto b = static_cast<double>(batch);
  return {frac(g0 + b * kGoldenStep) < cfg.grammar_feature_prob, frac(p0 + b * kSilverStep) < cfg.persona_prob};
}

std::string batch_id_for(std::uint64_t seed, std::size_t batch) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "s%llu-b%05zu", static_cast<unsigned long long>(seed), batch);
  return buf;
}

GenerateResult generate(llm::Client& client, const GenerateOptions& opts) {
  opts.sampler.validate();
  opts.sampling.validate();
  ParameterSpace space = opts.space;
  if (opts.sampler.name_list) space.name_list = *opts.sampler.name_list;
  space.validate();

  GenerateResult out;
  if (opts.count == 0) return out;
  const std::size_t max_batches = opts.max_batches ? opts.max_batches : 10 * opts.count + 100;
  const std::size_t round = std::max<std::size_t>(1, opts.prompts_per_round);

  post::ValidationOptions vopts;
  vopts.name_list = space.name_list;
  vopts.tagger = opts.tagger;
  std::unordered_set<std::string> seen;

  std::size_t next_batch = 0;
  while (out.stories.size() < opts.count) {
    if (next_batch >= max_batches) {
      out.error = "stopped after " + std::to_string(max_batches) + " batches with " +
                  std::to_string(out.stories.size()) + " stories kept";
      break;
    }
    std::vector<GenerationParams> params;
    std::vector<std::string> prompts;
    for (std::size_t i = 0; i < round && next_batch + i < max_batches; ++i) {
      const auto b = next_batch + i;
      const auto overrides = opts.balanced_optional_slots ? balanced_slots(opts.seed, b, opts.sampler) : SlotOverrides{};
      params.push_back(sample_params(space, opts.sampler, derive_seed(opts.seed, b), overrides));
      prompts.push_back(render_prompt(params.back(), space));
    }
    std::vector<llm::CompletionResult> completions;
    try {
      completions = client.complete_all(prompts, opts.sampling);
    } catch (const std::exception& e) {
      out.error = e.what();
      break;
    }
    for (std::size_t i = 0; i < completions.size() && out.stories.size() < opts.count; ++i) {
      const auto& c = completions[i];
      BatchRecord br;
      br.batch_id = batch_id_for(opts.seed, next_batch + i);
      br.params = params[i];
      br.finish_reason = std::string(llm::to_string(c.finish_reason));
      br.retry_count = c.retry_count;
      br.prompt_tokens = c.prompt_tokens.value_or(0);
      br.completion_tokens = c.completion_tokens.value_or(0);
      out.prompt_tokens += br.prompt_tokens;
      out.completion_tokens += br.completion_tokens;

      const auto split = split_completion(c.text, params[i].delimiter);
      br.stories_split = split.stories.size();
      const BatchInfo info{br.batch_id, opts.sampling.model_name, opts.timestamp, "en"};
      auto records = attach_labels(split.stories, params[i], info, split.last_possibly_truncated || c.truncated());
      for (auto& r : records) {
        if (out.stories.size() >= opts.count) break;
        auto report = post::validate_story(r, vopts);
        const bool keep = report.overall != post::Status::kFail;
        out.reports.push_back(std::move(report));
        if (!keep) continue;
        auto key = post::dedup_key(r.text);
        if (!seen.insert(key).second) {
          const auto dup = std::find_if(out.stories.begin(), out.stories.end(),
                                        [&](const StoryRecord& s) { return post::dedup_key(s.text) == key; });
          out.duplicates.emplace_back(r.id, dup == out.stories.end() ? std::string() : dup->id);
          continue;
        }
        out.stories.push_back(std::move(r));
        ++br.stories_kept;
      }
      out.batches.push_back(std::move(br));
    }
    next_batch += prompts.size();
  }
  return out;
}

nlohmann::ordered_json validation_json(const GenerateResult& r) {
  nlohmann::ordered_json j;
  std::map<std::string, std::map<std::string, std::size_t>> tally;
  std::map<std::string, std::size_t> overall;
  nlohmann::ordered_json stories = nlohmann::ordered_json::array();
  for (const auto& rep : r.reports) {
    ++overall[std::string(post::to_string(rep.overall))];
    nlohmann::ordered_json s;
    s["id"] = rep.story_id;
    s["overall"] = post::to_string(rep.overall);
    for (const auto& c : rep.checks) {
      ++tally[c.name][std::string(post::to_string(c.status))];
      if (c.status != post::Status::kPass && c.status != post::Status::kSkipped) {
        s["issues"][c.name] = {{"status", post::to_string(c.status)}, {"detail", c.detail}};
      }
    }
    stories.push_back(std::move(s));
  }
  j["stories_checked"] = r.reports.size();
  j["stories_kept"] = r.stories.size();
  j["overall"] = overall;
  j["checks"] = tally;
  nlohmann::ordered_json dups = nlohmann::ordered_json::array();
  for (const auto& [id, first] : r.duplicates) dups.push_back({{"id", id}, {"duplicate_of", first}});
  j["duplicates"] = dups;
  j["stories"] = stories;
  return j;
}

nlohmann::ordered_json cost_json(const GenerateResult& r, const std::string& model, const llm::PriceTable& prices) {
  nlohmann::ordered_json j;
  j["model"] = model;
  j["batches"] = r.batches.size();
  j["prompt_tokens"] = r.prompt_tokens;
  j["completion_tokens"] = r.completion_tokens;
  if (prices.count(model)) {
    j["cost_usd"] = llm::estimate_cost(r.prompt_tokens, r.completion_tokens, prices, model);
  } else {
    j["cost_usd"] = nullptr;
  }
  int retries = 0, truncated = 0;
  for (const auto& b : r.batches) {
    retries += b.retry_count;
    truncated += b.finish_reason == "length";
  }
  j["retries"] = retries;
  j["truncated_completions"] = truncated;
  return j;
}

// ---- analysis

namespace {

nlohmann::ordered_json table_json(const lexical::NgramTable& t) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& e : t.entries) {
    std::string g;
    for (std::size_t i = 0; i < e.ngram.size(); ++i) g += (i ? " " : "") + e.ngram[i];
    rows.push_back({{"ngram", g}, {"story_count", e.story_count}, {"story_fraction", e.story_fraction}});
  }
  return rows;
}

template <typename F>
void guarded(nlohmann::ordered_json& errors, const std::string& metric, F&& f) {
  try {
    f();
  } catch (const Error& e) {
    errors[metric] = e.what();
  }
}

}  // namespace

nlohmann::ordered_json analyze_corpus(const std::vector<std::string>& all_texts, const AnalyzeOptions& opts,
                                      const pos::PosTagger* tagger) {
  if (!(opts.subsample > 0.0 && opts.subsample <= 1.0)) throw InvalidInput("subsample must lie in (0, 1]");
  std::vector<std::string> texts;
  if (opts.subsample < 1.0) {
    const auto k = lexical::fraction_to_count(all_texts.size(), opts.subsample);
    for (auto i : lexical::subsample_indices(all_texts.size(), k, opts.lexical.seed)) texts.push_back(all_texts[i]);
  } else {
    texts = all_texts;
  }

  nlohmann::ordered_json j;
  j["kind"] = "analysis";
  nlohmann::ordered_json settings;
  settings["max_ngd_n"] = opts.lexical.max_ngd_n;
  settings["bleu_max_n"] = opts.lexical.bleu_max_n;
  settings["sample_size"] = opts.lexical.sample_size;
  settings["seed"] = opts.lexical.seed;
  settings["subsample"] = opts.subsample;
  settings["compressor"] = lexical::kCompressorName;
  settings["template_n"] = opts.template_n;
  settings["template_k"] = opts.template_k;
  settings["tokenizer"] = "lowercase letter runs, inner apostrophes kept";
  j["settings"] = settings;
  j["corpus_size"] = all_texts.size();
  j["analyzed_stories"] = texts.size();
  nlohmann::ordered_json errors = nlohmann::ordered_json::object();

  const auto corpus = lexical::tokenize_corpus(texts);
  nlohmann::ordered_json lex;
  nlohmann::ordered_json ngd = nlohmann::ordered_json::object();
  nlohmann::ordered_json ngd_mean = nlohmann::ordered_json::object();
  for (int n = 1; n <= opts.lexical.max_ngd_n; ++n) {
    guarded(errors, "ngd_" + std::to_string(n), [&] {
      ngd[std::to_string(n)] = lexical::ngram_diversity(corpus, n);
      ngd_mean[std::to_string(n)] = lexical::ngram_diversity_story_mean(corpus, n);
    });
  }
  lex["ngd"] = ngd;
  lex["ngd_story_mean"] = ngd_mean;
  guarded(errors, "diversity", [&] {
    if (texts.empty()) throw InvalidInput("corpus is empty");
    const auto rep = lexical::diversity_report(texts, opts.lexical);
    lex["compression_ratio"] = rep.compression_ratio;
    lex["self_bleu"] = rep.self_bleu;
    lex["sample_size"] = rep.sample_size;
    lex["self_bleu_per_story"] = rep.self_bleu_per_story;
    lex["compression_ratio_per_story"] = rep.compression_ratio_per_story;
  });
  nlohmann::ordered_json tables = nlohmann::ordered_json::object();
  for (int n : opts.table_ns) {
    guarded(errors, "ngram_table_" + std::to_string(n), [&] {
      if (corpus.empty()) throw InvalidInput("corpus is empty");
      const auto raw = lexical::ngram_story_fractions(corpus, n);
      tables[std::to_string(n)] = table_json(lexical::greedy_overlap_filter(raw, opts.table_rows));
    });
  }
  lex["ngram_tables"] = tables;
  std::map<std::string, std::size_t> freq;
  std::size_t total_words = 0;
  for (const auto& story : corpus) {
    for (const auto& w : story) ++freq[w];
    total_words += story.size();
  }
  std::vector<std::pair<std::string, std::size_t>> zipf(freq.begin(), freq.end());
  std::stable_sort(zipf.begin(), zipf.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  if (zipf.size() > opts.zipf_rows) zipf.resize(opts.zipf_rows);
  nlohmann::ordered_json zj = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < zipf.size(); ++i) zj.push_back({{"rank", i + 1},
                 {"word", zipf[i].first},
                 {"count", zipf[i].second},
                 {"fraction", static_cast<double>(zipf[i].second) / static_cast<double>(total_words)}});
  lex["zipf"] = zj;
  j["lexical"] = lex;

  if (opts.syntactic && tagger != nullptr) {
    nlohmann::ordered_json syn;
    guarded(errors, "syntactic", [&] {
      const auto tagged = syntax::tag_corpus(texts, *tagger);
      const auto set = syntax::extract_templates(tagged, opts.template_n, opts.template_k);
      syn["template_rate"] = syntax::template_rate(tagged, set);
      syn["templates_per_token"] = syntax::templates_per_token(tagged, set);
      nlohmann::ordered_json tj = nlohmann::ordered_json::array();
      const auto fractions = syntax::template_story_fractions(tagged, set);
      for (std::size_t i = 0; i < set.templates.size(); ++i) {
        std::string tags;
        for (const auto& t : set.templates[i].tags) tags += (tags.empty() ? "" : " ") + t;
        tj.push_back({{"tags", tags}, {"count", set.templates[i].count}, {"story_fraction", fractions[i]}});
      }
      syn["templates"] = tj;
    });
    j["syntactic"] = syn;
  }
  j["errors"] = errors;
  return j;
}

// ---- comparison

namespace {

nlohmann::ordered_json two_group_tests(const std::vector<double>& a, const std::vector<double>& b,
                                       const std::string& na, const std::string& nb) {
  nlohmann::ordered_json j;
  if (a.size() < 2 || b.size() < 2) {
    j["error"] = "each side needs at least 2 scores";
    return j;
  }
  const auto summary = judge::summarize_metric({{na, a}, {nb, b}});
  j = judge::to_json(summary);
  try {
    const auto t = stats::t_test_pooled(a, b);
    j["t_test"] = {{"statistic", t.statistic}, {"df", t.df1}, {"p_value", t.p_value}};
  } catch (const Error&) {
    j["t_test"] = nullptr;
  }
  return j;
}

std::vector<double> doubles(const nlohmann::json& arr) {
  std::vector<double> out;
  if (!arr.is_array()) return out;
  for (const auto& v : arr) {
    if (v.is_number()) out.push_back(v.get<double>());
  }
  return out;
}

nlohmann::ordered_json compare_judge(const nlohmann::json& a, const nlohmann::json& b, const std::string& na,
                                     const std::string& nb) {
  if (a.value("mode", "") != b.value("mode", "")) {
    throw InvalidInput("judge score files use different modes: " + a.value("mode", std::string("?")) + " vs " +
                       b.value("mode", std::string("?")));
  }
  nlohmann::ordered_json j;
  j["kind"] = "judge-comparison";
  j["mode"] = a.value("mode", "");
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> metrics;
  auto collect = [&](const nlohmann::json& file, bool first) {
    for (const auto& unit : file.value("units", nlohmann::json::array())) {
      for (auto it = unit.begin(); it != unit.end(); ++it) {
        if (!it.value().is_number()) continue;
        auto& slot = metrics[it.key()];
        (first ? slot.first : slot.second).push_back(it.value().get<double>());
      }
    }
  };
  collect(a, true);
  collect(b, false);
  for (const auto& [name, xs] : metrics) j["metrics"][name] = two_group_tests(xs.first, xs.second, na, nb);
  return j;
}

}  // namespace

nlohmann::ordered_json compare_reports(const nlohmann::json& a, const nlohmann::json& b, const std::string& na,
                                       const std::string& nb) {
  if (na == nb) throw InvalidInput("the two sides need different names");
  const auto kind_a = a.value("kind", std::string());
  const auto kind_b = b.value("kind", std::string());
  if (kind_a != kind_b) throw InvalidInput("cannot compare a " + kind_a + " file with a " + kind_b + " file");
  if (kind_a == "judge-scores") return compare_judge(a, b, na, nb);
  if (kind_a != "analysis") throw InvalidInput("unknown report kind '" + kind_a + "'");
  if (a.value("settings", nlohmann::json()) != b.value("settings", nlohmann::json())) {
    std::string diff;
    const auto& sa = a["settings"];
    const auto& sb = b["settings"];
    for (auto it = sa.begin(); it != sa.end(); ++it) {
      if (!sb.contains(it.key()) || sb[it.key()] != it.value()) diff += " " + it.key();
    }
    throw InvalidInput("reports were computed with different settings:" + (diff.empty() ? std::string(" (keys)") : diff));
  }
  nlohmann::ordered_json j;
  j["kind"] = "comparison";
  j["names"] = {na, nb};
  j["settings"] = a["settings"];
  const auto& la = a["lexical"];
  const auto& lb = b["lexical"];
  nlohmann::ordered_json side;
  for (const char* key : {"compression_ratio", "self_bleu"}) {
    side[key] = {{na, la.value(key, nlohmann::json())}, {nb, lb.value(key, nlohmann::json())}};
  }
  if (a.contains("syntactic") && b.contains("syntactic")) {
    for (const char* key : {"template_rate", "templates_per_token"}) {
      side[key] = {{na, a["syntactic"].value(key, nlohmann::json())}, {nb, b["syntactic"].value(key, nlohmann::json())}};
    }
  }
  j["metrics"] = side;
  nlohmann::ordered_json curve = nlohmann::ordered_json::array();
  const auto& ga = la.value("ngd", nlohmann::json::object());
  const auto& gb = lb.value("ngd", nlohmann::json::object());
  for (int n = 1; n <= a["settings"].value("max_ngd_n", 0); ++n) {
    const auto k = std::to_string(n);
    curve.push_back({{"n", n}, {na, ga.value(k, nlohmann::json())}, {nb, gb.value(k, nlohmann::json())}});
  }
  j["ngd_curve"] = curve;
  nlohmann::ordered_json tests;
  tests["self_bleu"] = two_group_tests(doubles(la.value("self_bleu_per_story", nlohmann::json())),
                                       doubles(lb.value("self_bleu_per_story", nlohmann::json())), na, nb);
  tests["compression_ratio"] = two_group_tests(doubles(la.value("compression_ratio_per_story", nlohmann::json())),
                                               doubles(lb.value("compression_ratio_per_story", nlohmann::json())), na, nb);
  j["tests"] = tests;
  nlohmann::ordered_json zipf = nlohmann::ordered_json::array();
  const auto za = la.value("zipf", nlohmann::json::array());
  const auto zb = lb.value("zipf", nlohmann::json::array());
  for (std::size_t i = 0; i < std::max(za.size(), zb.size()); ++i) {
    zipf.push_back({{"rank", i + 1},
                    {na, i < za.size() ? za[i]["count"] : nlohmann::json()},
                    {nb, i < zb.size() ? zb[i]["count"] : nlohmann::json()}});
  }
  j["zipf"] = zipf;
  return j;
}

std::string render_report(const nlohmann::json& r) {
  std::ostringstream o;
  o << std::setprecision(6);
  o << "stories analyzed: " << r.value("analyzed_stories", 0) << " of " << r.value("corpus_size", 0) << "\n";
  const auto lex = r.value("lexical", nlohmann::json::object());
  const auto ngd = lex.value("ngd", nlohmann::json::object());
  const auto tables = lex.value("ngram_tables", nlohmann::json::object());
  const auto errors = r.value("errors", nlohmann::json::object());
  o << "\nn-gram diversity\n";
  // Keys are strings; print in numeric order.
  for (int n = 1; n <= static_cast<int>(ngd.size()) + 1; ++n) {
    const auto k = std::to_string(n);
    if (ngd.contains(k) && ngd[k].is_number()) o << "  n=" << k << "  " << ngd[k].get<double>() << "\n";
  }
  if (lex.contains("compression_ratio")) o << "\ncompression ratio: " << lex["compression_ratio"].get<double>() << "\n";
  if (lex.contains("self_bleu")) o << "self-BLEU: " << lex["self_bleu"].get<double>() << "\n";
  for (const auto& [n, rows] : tables.items()) {
    o << "\ntop " << n << "-grams (story fraction)\n";
    for (const auto& row : rows) {
      o << "  " << std::fixed << std::setprecision(4) << row["story_fraction"].get<double>() << "  "
        << row["ngram"].get<std::string>() << "\n";
    }
    o << std::defaultfloat << std::setprecision(6);
  }
  if (r.contains("syntactic") && r["syntactic"].contains("template_rate")) {
    o << "\ntemplate rate: " << r["syntactic"]["template_rate"].get<double>() << "\n";
    o << "templates per token: " << r["syntactic"]["templates_per_token"].get<double>() << "\n";
  }
  if (!errors.empty()) {
    o << "\nmetrics not computed\n";
    for (const auto& [k, v] : errors.items()) o << "  " << k << ": " << v.get<std::string>() << "\n";
  }
  return o.str();
}

}  // namespace sstories
