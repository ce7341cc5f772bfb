#pragma once
// Model-as-judge prompts, response parsing, label-recovery scoring and the
// runners that drive judges through the LLM client.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sstories/corpus.hpp"
#include "sstories/llm_client.hpp"
#include "sstories/stats.hpp"

namespace sstories::judge {

inline const std::vector<std::string> kDiversityKeys = {"simplicity", "diversity_style", "diversity_content"};
inline const std::vector<std::string> kStoryEvalKeys = {"ORIGINALITY", "COHERENCE", "GRAMMAR", "QUALITY"};
inline const std::vector<std::string> kLabelAxes = {"theme", "topic", "style", "narrative_feature"};

std::string build_diversity_prompt(const std::vector<std::string>& stories);
std::string build_story_eval_prompt(const std::string& story);
std::string build_label_recovery_prompt(const std::string& story, const ParameterSpace& space);

struct ParsedScores {
  std::map<std::string, int> scores;
  std::string explanation;
};

// Uses the last well-formed JSON object in the text. Keys match case
// insensitively. No object or a missing/non-integer key -> ParseError;
// a score outside [0, 100] -> RangeError.
ParsedScores parse_judge_response(const std::string& text, const std::vector<std::string>& expected_keys);

struct ParsedLabels {
  std::map<std::string, std::string> predicted;  // axis -> option, canonical spelling
  std::string explanation;
};

// Like parse_judge_response, but each axis must name one of its options
// (case-insensitive); an unknown option -> RangeError.
ParsedLabels parse_label_response(const std::string& text, const ParameterSpace& space);

// The last well-formed JSON object in the text, if any.
std::optional<nlohmann::json> last_json_object(const std::string& text);

struct DiversityJudgment {
  std::string explanation;
  int simplicity = 0;
  int diversity_style = 0;
  int diversity_content = 0;
  std::vector<std::string> story_ids;  // exactly 4
};

struct StoryJudgment {
  std::string explanation;
  int originality = 0;
  int coherence = 0;
  int grammar = 0;
  int quality = 0;
  std::string story_id;
};

struct LabelRecovery {
  std::string story_id;
  std::map<std::string, std::string> predicted;
  std::map<std::string, std::string> truth;
};

// Per-axis fraction of exact (case-insensitive) matches.
std::map<std::string, double> label_accuracy(const std::vector<LabelRecovery>& recoveries);
// 1 / number of options for each label axis.
std::map<std::string, double> random_guess_baseline(const ParameterSpace& space);

struct JudgeStory {
  std::string id;
  std::string text;
  LabelSet labels;
};

struct Dropped {
  std::size_t unit = 0;
  std::string reason;
};

template <typename T>
struct JudgeRun {
  std::vector<T> results;
  std::vector<Dropped> dropped;
};

struct RunOptions {
  std::size_t n = 200;
  std::uint64_t seed = 0;
};

// Each unit judges 4 stories drawn without replacement; units may overlap.
JudgeRun<DiversityJudgment> run_diversity(llm::Client& client, const llm::SamplingConfig& cfg,
                                          const std::vector<JudgeStory>& stories, const RunOptions& opts);
// min(n, stories) distinct stories.
JudgeRun<StoryJudgment> run_story_eval(llm::Client& client, const llm::SamplingConfig& cfg,
                                       const std::vector<JudgeStory>& stories, const RunOptions& opts);
JudgeRun<LabelRecovery> run_label_recovery(llm::Client& client, const llm::SamplingConfig& cfg,
                                           const std::vector<JudgeStory>& stories, const ParameterSpace& space,
                                           const RunOptions& opts);

struct GroupSummary {
  std::size_t n = 0;
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

struct MetricSummary {
  std::map<std::string, GroupSummary> groups;
  // Set when there are at least two groups and the test is defined.
  std::optional<stats::StatResult> anova;
};

inline constexpr double kCiLevel = 0.999;

// Means, normal CIs and a one-way ANOVA across groups (datasets).
MetricSummary summarize_metric(const std::map<std::string, std::vector<double>>& groups, double level = kCiLevel,
                               stats::IntervalKind kind = stats::IntervalKind::kMean);

nlohmann::ordered_json to_json(const MetricSummary& s);

struct AxisRecoverySummary {
  double accuracy = 0.0;
  double baseline = 0.0;
  std::size_t n = 0;
  // One-sample t-test of per-story correctness against the baseline; unset
  // when every answer agrees (zero variance).
  std::optional<stats::StatResult> t_test;
};

std::map<std::string, AxisRecoverySummary> summarize_label_recovery(const std::vector<LabelRecovery>& recoveries,
                                                                    const ParameterSpace& space);
nlohmann::ordered_json to_json(const std::map<std::string, AxisRecoverySummary>& s);

// Judge stand-in for offline runs. Recognizes the three prompt kinds and
// answers with a short reasoning paragraph followed by the JSON block. Scores
// are computed from simple text statistics, so they are deterministic and
// respond to the stories.
class MockJudgeBackend : public llm::Backend {
 public:
  llm::HttpResponse post(const std::string& request_body) override;
  static std::string respond(const std::string& prompt);
};

}  // namespace sstories::judge
