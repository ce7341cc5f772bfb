#pragma once
// Per-story metrics, constraint validation and exact-duplicate removal for
// generated stories.

#include <filesystem>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "sstories/corpus.hpp"
#include "sstories/pos_tagger.hpp"

namespace sstories::post {

// Vowel groups (a e i o u y), minus one for a terminal silent "e" that is
// not part of "le", never below one. Known misses: "rhythm" -> 1.
int count_syllables(std::string_view word);

// 0.39 * words/sentences + 11.8 * syllables/words - 15.59.
double flesch_kincaid_grade(std::string_view text);

StoryMetrics compute_metrics(std::string_view text);

enum class Status { kPass, kWarn, kFail, kSkipped };
std::string_view to_string(Status s);

struct Check {
  std::string name;
  Status status = Status::kPass;
  std::string detail;
};

struct ValidationReport {
  std::string story_id;
  std::vector<Check> checks;
  Status overall = Status::kPass;  // kPass, kWarn or kFail

  const Check* find(std::string_view name) const;
};

// Loaded from data/common_words.txt.
const std::unordered_set<std::string>& default_common_words();

struct ValidationOptions {
  std::vector<std::string> name_list;
  // Without a tagger the first_pos check is skipped.
  const pos::PosTagger* tagger = nullptr;
  const std::unordered_set<std::string>* common_words = nullptr;
};

// Checks: first_letter and ascii_clean (hard), first_pos, delimiter_residue
// and name_whitelist (warn level).
ValidationReport validate_story(const StoryRecord& record, const ValidationOptions& options);

// True when the lowercase word is common or splits into common words.
bool decomposes_into_common_words(const std::string& lower_word, const std::unordered_set<std::string>& common);

struct DedupResult {
  std::vector<StoryRecord> kept;
  // (dropped id, id of the surviving first occurrence)
  std::vector<std::pair<std::string, std::string>> dropped;
};

std::string dedup_key(std::string_view text);
DedupResult dedup(std::vector<StoryRecord> records);

}  // namespace sstories::post
