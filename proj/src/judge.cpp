#include "sstories/judge.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "sstories/errors.hpp"
#include "sstories/rng.hpp"
#include "sstories/text.hpp"

namespace sstories::judge {

namespace {

std::string lower(std::string_view s) { return text::to_lower(s); }

// Position one past the brace matching the '{' at `start`, honouring JSON
// strings; npos when unbalanced.
std::size_t match_brace(const std::string& s, std::size_t start) {
  int depth = 0;
  bool in_str = false;
  for (std::size_t i = start; i < s.size(); ++i) {
    const char c = s[i];
    if (in_str) {
      if (c == '\\') ++i;
      else if (c == '"') in_str = false;
      continue;
    }
    if (c == '"') in_str = true;
    else if (c == '{') ++depth;
    else if (c == '}' && --depth == 0) return i + 1;
  }
  return std::string::npos;
}

const nlohmann::json* find_key(const nlohmann::json& obj, const std::string& key) {
  const auto want = lower(key);
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (lower(it.key()) == want) return &it.value();
  }
  return nullptr;
}

std::string explanation_of(const nlohmann::json& obj) {
  const auto* e = find_key(obj, "explanation");
  return e && e->is_string() ? e->get<std::string>() : std::string();
}

const std::vector<std::string>& axis_options(const ParameterSpace& space, const std::string& axis) {
  if (axis == "theme") return space.themes;
  if (axis == "topic") return space.topics;
  if (axis == "style") return space.styles;
  if (axis == "narrative_feature") return space.narrative_features;
  throw InvalidInput("unknown label axis " + axis);
}

const std::string& label_of(const LabelSet& l, const std::string& axis) {
  if (axis == "theme") return l.theme;
  if (axis == "topic") return l.topic;
  if (axis == "style") return l.style;
  return l.narrative_feature;
}

std::string join(const std::vector<std::string>& v, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += v[i];
  }
  return out;
}

// Sends prompts concurrently, then parses; a unit whose answer does not
// parse is asked once more and dropped if it still fails.
template <typename T, typename Parse>
JudgeRun<T> run_units(llm::Client& client, const llm::SamplingConfig& cfg, const std::vector<std::string>& prompts,
                      Parse parse) {
  JudgeRun<T> run;
  const auto answers = client.complete_all(prompts, cfg);
  for (std::size_t u = 0; u < prompts.size(); ++u) {
    try {
      run.results.push_back(parse(u, answers[u].text));
      continue;
    } catch (const ParseError&) {
    } catch (const RangeError&) {
    }
    try {
      run.results.push_back(parse(u, client.complete(prompts[u], cfg).text));
    } catch (const ParseError& e) {
      run.dropped.push_back({u, e.what()});
    } catch (const RangeError& e) {
      run.dropped.push_back({u, e.what()});
    }
  }
  return run;
}

}  // namespace

std::string build_diversity_prompt(const std::vector<std::string>& stories) {
  if (stories.size() != 4) throw InvalidInput("the diversity judge takes exactly 4 stories");
  std::string joined;
  for (std::size_t i = 0; i < stories.size(); ++i) {
    joined += "\n--- Story " + std::to_string(i + 1) + " ---\n" + stories[i] + "\n";
  }
  return "Please evaluate this set of stories and provide structured feedback.\n"
         "        \n"
         "        Stories to evaluate:\n"
         "        " + joined +
         "        Analyze these stories and provide scores (0-100) and brief explanations for:\n"
         "        1. Simplicity: How easy are the stories to understand?\n"
         "        2. Diversity of style: How varied is the writing style across stories?\n"
         "        3. Diversity of content: How varied are the themes and plot lines?\n"
         "        \n"
         "        Provide your assessment in this exact format, for all stories taken together:\n"
         "        {\"explanation\": \"short explanation here\",\n"
         "        \"simplicity\": 0,\n"
         "        \"diversity_style\": 0,\n"
         "        \"diversity_content\": 0}";
}

std::string build_story_eval_prompt(const std::string& story) {
  if (text::trim(story).empty()) throw InvalidInput("cannot evaluate an empty story");
  return "Evaluate the following story based on four criteria by assigning each a score from 0 to 100:\n"
         "1. **Originality**: Rate the creativity and uniqueness of the story.\n"
         "2. **Coherence**: Rate the logical flow and consistency of the story.\n"
         "3. **Grammar**: Rate the grammatical correctness of the story. Ignore spacing and capitalization.\n"
         "4. **Quality**: Rate the overall quality of the story.\n"
         "You should also provide a short explanation for your judgment.\n"
         "\n"
         "**Story to evaluate:**\n" +
         story +
         "\n"
         "\n"
         "Please provide your assessment in the following format, ensuring each score is an integer between 0 "
         "and 100:\n"
         "{\"EXPLANATION\": \"The dialogue is coherent, but the phrasing is slightly off.\",\"ORIGINALITY\": 0, "
         "\"COHERENCE\": 0, \"GRAMMAR\": 0, \"QUALITY\": 0}";
}

std::string build_label_recovery_prompt(const std::string& story, const ParameterSpace& space) {
  space.validate();
  std::string s =
      "The story below was written to match four labels: a theme, a topic, a writing style and a narrative "
      "feature. Work out which labels were used. For each label choose exactly one option from its list, "
      "copied exactly as written.\n\n";
  for (const auto& axis : kLabelAxes) s += axis + " options: " + join(axis_options(space, axis), " | ") + "\n";
  s += "\nStory:\n" + story + "\n\n";
  s += "First think step by step and explain your reasoning in a few sentences. Then give your answer in this "
       "exact format:\n"
       "{\"explanation\": \"short explanation here\", \"theme\": \"...\", \"topic\": \"...\", \"style\": \"...\", "
       "\"narrative_feature\": \"...\"}";
  return s;
}

std::optional<nlohmann::json> last_json_object(const std::string& text) {
  std::optional<nlohmann::json> best;
  std::size_t best_end = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '{') continue;
    const auto end = match_brace(text, i);
    if (end == std::string::npos) continue;
    // Later-ending objects win; for equal ends the outermost (first seen).
    if (best && end <= best_end) continue;
    try {
      auto j = nlohmann::json::parse(text.begin() + static_cast<std::ptrdiff_t>(i),
                                     text.begin() + static_cast<std::ptrdiff_t>(end));
      if (j.is_object()) {
        best = std::move(j);
        best_end = end;
      }
    } catch (const nlohmann::json::parse_error&) {
    }
  }
  return best;
}

ParsedScores parse_judge_response(const std::string& text, const std::vector<std::string>& expected_keys) {
  const auto obj = last_json_object(text);
  if (!obj) throw ParseError("judge response contains no JSON object");
  ParsedScores out;
  out.explanation = explanation_of(*obj);
  for (const auto& key : expected_keys) {
    const auto* v = find_key(*obj, key);
    if (!v) throw ParseError("judge response lacks key " + key);
    long long score;
    if (v->is_number_integer()) {
      score = v->get<long long>();
    } else if (v->is_number_float() && std::floor(v->get<double>()) == v->get<double>() &&
               std::abs(v->get<double>()) < 1e15) {
      score = static_cast<long long>(v->get<double>());
    } else {
      throw ParseError("judge score " + key + " is not an integer");
    }
    if (score < 0 || score > 100) throw RangeError("judge score " + key + " = " + std::to_string(score) + " outside [0, 100]");
    out.scores[key] = static_cast<int>(score);
  }
  return out;
}

ParsedLabels parse_label_response(const std::string& text, const ParameterSpace& space) {
  const auto obj = last_json_object(text);
  if (!obj) throw ParseError("label response contains no JSON object");
  ParsedLabels out;
  out.explanation = explanation_of(*obj);
  for (const auto& axis : kLabelAxes) {
    const auto* v = find_key(*obj, axis);
    if (!v || !v->is_string()) throw ParseError("label response lacks a string for " + axis);
    const auto want = lower(text::trim(v->get<std::string>()));
    const auto& options = axis_options(space, axis);
    const auto it = std::find_if(options.begin(), options.end(), [&](const std::string& o) { return lower(o) == want; });
    if (it == options.end()) throw RangeError("'" + v->get<std::string>() + "' is not a " + axis + " option");
    out.predicted[axis] = *it;
  }
  return out;
}

std::map<std::string, double> label_accuracy(const std::vector<LabelRecovery>& recoveries) {
  if (recoveries.empty()) throw InvalidInput("label accuracy of no recoveries");
  std::map<std::string, std::pair<std::size_t, std::size_t>> tally;  // axis -> (right, total)
  for (const auto& r : recoveries) {
    for (const auto& [axis, truth] : r.truth) {
      auto& t = tally[axis];
      ++t.second;
      const auto it = r.predicted.find(axis);
      if (it != r.predicted.end() && lower(it->second) == lower(truth)) ++t.first;
    }
  }
  std::map<std::string, double> out;
  for (const auto& [axis, t] : tally) out[axis] = static_cast<double>(t.first) / static_cast<double>(t.second);
  return out;
}

std::map<std::string, double> random_guess_baseline(const ParameterSpace& space) {
  std::map<std::string, double> out;
  for (const auto& axis : kLabelAxes) {
    const auto& options = axis_options(space, axis);
    if (options.empty()) throw InvalidInput(axis + " has no options");
    out[axis] = 1.0 / static_cast<double>(options.size());
  }
  return out;
}

JudgeRun<DiversityJudgment> run_diversity(llm::Client& client, const llm::SamplingConfig& cfg,
                                          const std::vector<JudgeStory>& stories, const RunOptions& opts) {
  if (stories.size() < 4) throw InvalidInput("the diversity judge needs at least 4 stories");
  std::vector<std::vector<std::size_t>> units;
  std::vector<std::string> prompts;
  for (std::size_t u = 0; u < opts.n; ++u) {
    Rng rng(derive_seed(opts.seed, u));
    auto pick = sample_without_replacement(rng, stories.size(), 4);
    std::vector<std::string> texts;
    for (auto i : pick) texts.push_back(stories[i].text);
    prompts.push_back(build_diversity_prompt(texts));
    units.push_back(std::move(pick));
  }
  return run_units<DiversityJudgment>(client, cfg, prompts, [&](std::size_t u, const std::string& answer) {
    const auto p = parse_judge_response(answer, kDiversityKeys);
    DiversityJudgment j;
    j.explanation = p.explanation;
    j.simplicity = p.scores.at("simplicity");
    j.diversity_style = p.scores.at("diversity_style");
    j.diversity_content = p.scores.at("diversity_content");
    for (auto i : units[u]) j.story_ids.push_back(stories[i].id);
    return j;
  });
}

JudgeRun<StoryJudgment> run_story_eval(llm::Client& client, const llm::SamplingConfig& cfg,
                                       const std::vector<JudgeStory>& stories, const RunOptions& opts) {
  if (stories.empty()) throw InvalidInput("no stories to evaluate");
  Rng rng(opts.seed);
  const auto pick = sample_without_replacement(rng, stories.size(), opts.n);
  std::vector<std::string> prompts;
  for (auto i : pick) prompts.push_back(build_story_eval_prompt(stories[i].text));
  return run_units<StoryJudgment>(client, cfg, prompts, [&](std::size_t u, const std::string& answer) {
    const auto p = parse_judge_response(answer, kStoryEvalKeys);
    StoryJudgment j;
    j.explanation = p.explanation;
    j.originality = p.scores.at("ORIGINALITY");
    j.coherence = p.scores.at("COHERENCE");
    j.grammar = p.scores.at("GRAMMAR");
    j.quality = p.scores.at("QUALITY");
    j.story_id = stories[pick[u]].id;
    return j;
  });
}

JudgeRun<LabelRecovery> run_label_recovery(llm::Client& client, const llm::SamplingConfig& cfg,
                                           const std::vector<JudgeStory>& stories, const ParameterSpace& space,
                                           const RunOptions& opts) {
  if (stories.empty()) throw InvalidInput("no stories to label");
  Rng rng(opts.seed);
  const auto pick = sample_without_replacement(rng, stories.size(), opts.n);
  std::vector<std::string> prompts;
  for (auto i : pick) prompts.push_back(build_label_recovery_prompt(stories[i].text, space));
  return run_units<LabelRecovery>(client, cfg, prompts, [&](std::size_t u, const std::string& answer) {
    const auto p = parse_label_response(answer, space);
    const auto& s = stories[pick[u]];
    LabelRecovery r;
    r.story_id = s.id;
    r.predicted = p.predicted;
    for (const auto& axis : kLabelAxes) r.truth[axis] = label_of(s.labels, axis);
    return r;
  });
}

MetricSummary summarize_metric(const std::map<std::string, std::vector<double>>& groups, double level,
                               stats::IntervalKind kind) {
  MetricSummary s;
  std::vector<std::vector<double>> all;
  for (const auto& [name, xs] : groups) {
    if (xs.size() < 2) throw InvalidInput("group " + name + " needs at least 2 scores");
    GroupSummary g;
    g.n = xs.size();
    g.mean = stats::mean(xs);
    std::tie(g.ci_low, g.ci_high) = stats::normal_ci(xs, level, kind);
    s.groups[name] = g;
    all.push_back(xs);
  }
  if (all.size() >= 2) {
    try {
      s.anova = stats::anova_one_way(all);
    } catch (const InvalidInput&) {
      // every score identical: the test is undefined
    }
  }
  return s;
}

namespace {

nlohmann::ordered_json stat_json(const std::optional<stats::StatResult>& r) {
  if (!r) return nullptr;
  nlohmann::ordered_json j;
  j["statistic"] = std::isfinite(r->statistic) ? nlohmann::ordered_json(r->statistic) : nlohmann::ordered_json("inf");
  j["df1"] = r->df1;
  j["df2"] = r->df2 ? nlohmann::ordered_json(*r->df2) : nlohmann::ordered_json(nullptr);
  j["p_value"] = r->p_value;
  j["n"] = r->n;
  return j;
}

}  // namespace

nlohmann::ordered_json to_json(const MetricSummary& s) {
  nlohmann::ordered_json j;
  for (const auto& [name, g] : s.groups) {
    j["groups"][name] = {{"n", g.n}, {"mean", g.mean}, {"ci_low", g.ci_low}, {"ci_high", g.ci_high}};
  }
  j["anova"] = stat_json(s.anova);
  return j;
}

std::map<std::string, AxisRecoverySummary> summarize_label_recovery(const std::vector<LabelRecovery>& recoveries,
                                                                    const ParameterSpace& space) {
  const auto acc = label_accuracy(recoveries);
  const auto base = random_guess_baseline(space);
  std::map<std::string, AxisRecoverySummary> out;
  for (const auto& [axis, a] : acc) {
    AxisRecoverySummary s;
    s.accuracy = a;
    s.baseline = base.count(axis) ? base.at(axis) : 0.0;
    std::vector<double> hits;
    for (const auto& r : recoveries) {
      const auto t = r.truth.find(axis);
      if (t == r.truth.end()) continue;
      const auto p = r.predicted.find(axis);
      hits.push_back(p != r.predicted.end() && lower(p->second) == lower(t->second) ? 1.0 : 0.0);
    }
    s.n = hits.size();
    if (hits.size() >= 2) {
      try {
        s.t_test = stats::t_test_one_sample(hits, s.baseline);
      } catch (const InvalidInput&) {
      }
    }
    out[axis] = s;
  }
  return out;
}

nlohmann::ordered_json to_json(const std::map<std::string, AxisRecoverySummary>& s) {
  nlohmann::ordered_json j;
  for (const auto& [axis, a] : s) {
    j[axis] = {{"n", a.n}, {"accuracy", a.accuracy}, {"baseline", a.baseline}, {"t_test", stat_json(a.t_test)}};
  }
  return j;
}

// ---- mock judge

namespace {

int clamp_score(double x) { return static_cast<int>(std::clamp(std::lround(x), 0L, 100L)); }

std::string between(const std::string& s, const std::string& from, const std::string& to) {
  const auto a = s.find(from);
  if (a == std::string::npos) return {};
  const auto start = a + from.size();
  const auto b = s.find(to, start);
  return s.substr(start, b == std::string::npos ? std::string::npos : b - start);
}

double distinct_ratio(const std::vector<std::string>& items) {
  if (items.empty()) return 0.0;
  return static_cast<double>(std::set<std::string>(items.begin(), items.end()).size()) /
         static_cast<double>(items.size());
}

std::vector<std::string> bigrams(const std::vector<std::string>& w) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i + 1 < w.size(); ++i) out.push_back(w[i] + " " + w[i + 1]);
  return out;
}

double mean_word_length(const std::vector<std::string>& w) {
  if (w.empty()) return 0.0;
  std::size_t chars = 0;
  for (const auto& x : w) chars += x.size();
  return static_cast<double>(chars) / static_cast<double>(w.size());
}

std::string mock_diversity(const std::string& prompt) {
  const auto words = text::word_tokenize(between(prompt, "Stories to evaluate:", "Analyze these stories"));
  nlohmann::ordered_json j;
  j["explanation"] = "The stories use short words; their wording overlaps to some degree.";
  j["simplicity"] = clamp_score(130.0 - 12.0 * mean_word_length(words));
  j["diversity_style"] = clamp_score(100.0 * distinct_ratio(bigrams(words)));
  j["diversity_content"] = clamp_score(100.0 * distinct_ratio(words));
  return "The set reads easily. I looked at vocabulary and sentence shapes across the four stories.\n\n" + j.dump();
}

std::string mock_story_eval(const std::string& prompt) {
  const auto story = between(prompt, "**Story to evaluate:**\n", "\n\nPlease provide your assessment");
  const auto words = text::word_tokenize(story);
  const auto h = llm::fnv1a64(story);
  const int originality = clamp_score(100.0 * distinct_ratio(words));
  const int coherence = 50 + static_cast<int>(h % 41);
  const int grammar = 60 + static_cast<int>((h >> 8) % 36);
  nlohmann::ordered_json j;
  j["EXPLANATION"] = "Simple and readable, though the plot wanders.";
  j["ORIGINALITY"] = originality;
  j["COHERENCE"] = coherence;
  j["GRAMMAR"] = grammar;
  j["QUALITY"] = (originality + coherence + grammar) / 3;
  return "Here is my assessment.\n" + j.dump();
}

std::string mock_label(const std::string& prompt) {
  const auto story = between(prompt, "\nStory:\n", "\n\nFirst think step by step");
  const auto words = text::word_tokenize(story);
  const std::set<std::string> vocab(words.begin(), words.end());
  const auto h = llm::fnv1a64(story);
  nlohmann::ordered_json j;
  j["explanation"] = "Picked the options whose words appear in the story.";
  std::uint64_t salt = 0;
  for (const auto& axis : kLabelAxes) {
    const auto line = between(prompt, axis + " options: ", "\n");
    std::vector<std::string> options;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      auto bar = line.find(" | ", pos);
      if (bar == std::string::npos) bar = line.size();
      options.push_back(line.substr(pos, bar - pos));
      pos = bar + 3;
    }
    std::string choice = options[splitmix64(h + salt++) % options.size()];
    std::size_t best = 0;
    for (const auto& o : options) {
      std::size_t overlap = 0;
      for (const auto& w : text::word_tokenize(o)) {
        if (w.size() >= 4 && vocab.count(w)) ++overlap;
      }
      if (overlap > best) {
        best = overlap;
        choice = o;
      }
    }
    j[axis] = choice;
  }
  return "Reasoning: the wording hints at some labels; for the rest I guessed.\n" + j.dump();
}

}  // namespace

std::string MockJudgeBackend::respond(const std::string& prompt) {
  if (prompt.find("Diversity of style") != std::string::npos) return mock_diversity(prompt);
  if (prompt.find("**Originality**") != std::string::npos) return mock_story_eval(prompt);
  if (prompt.find("narrative_feature options:") != std::string::npos) return mock_label(prompt);
  return "I cannot judge this.";
}

llm::HttpResponse MockJudgeBackend::post(const std::string& request_body) {
  nlohmann::json req;
  try {
    req = nlohmann::json::parse(request_body);
  } catch (const nlohmann::json::parse_error&) {
    return {400, R"({"error":{"message":"request body is not JSON"}})"};
  }
  const auto& msgs = req.value("messages", nlohmann::json::array());
  if (!msgs.is_array() || msgs.empty()) return {400, R"({"error":{"message":"no messages"}})"};
  const auto prompt = msgs.back().value("content", std::string());
  const auto answer = respond(prompt);
  nlohmann::ordered_json resp;
  resp["object"] = "chat.completion";
  resp["model"] = req.value("model", std::string("mock-judge"));
  resp["choices"] = nlohmann::ordered_json::array(
      {{{"index", 0}, {"message", {{"role", "assistant"}, {"content", answer}}}, {"finish_reason", "stop"}}});
  const auto pt = llm::approx_token_count(prompt);
  const auto ct = llm::approx_token_count(answer);
  resp["usage"] = {{"prompt_tokens", pt}, {"completion_tokens", ct}, {"total_tokens", pt + ct}};
  return {200, resp.dump()};
}

}  // namespace sstories::judge
