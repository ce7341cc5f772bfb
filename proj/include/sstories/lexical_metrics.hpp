#pragma once
// Lexical diversity: per-story n-gram frequency tables with greedy overlap
// filtering, n-gram diversity, compression ratio and Self-BLEU.
//
// A "tokenized corpus" is one vector of lowercase word tokens per story, as
// produced by text::word_tokenize.

#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace sstories::lexical {

using Tokens = std::vector<std::string>;
using TokenizedCorpus = std::vector<Tokens>;

TokenizedCorpus tokenize_corpus(std::span<const std::string> texts);

struct NgramEntry {
  std::vector<std::string> ngram;
  std::size_t story_count = 0;
  double story_fraction = 0.0;
};

struct NgramTable {
  int n = 1;
  std::vector<NgramEntry> entries;
  double subsample_fraction = 1.0;
};

// story_fraction = stories containing the n-gram / stories. Sorted by
// fraction descending, ties lexicographic on the word tuple.
NgramTable ngram_story_fractions(const TokenizedCorpus& corpus, int n);

// Number of shared words, counted as multiset intersection size.
std::size_t overlap_words(const std::vector<std::string>& a, const std::vector<std::string>& b);

// Keeps an entry iff it shares at most max(0, n - 2) words with every entry
// kept before it. Scanning stops once `limit` entries are kept.
NgramTable greedy_overlap_filter(const NgramTable& table,
                                 std::size_t limit = std::numeric_limits<std::size_t>::max());

struct NgramDiversity {
  double score = 0.0;
  std::size_t distinct = 0;
  std::size_t total = 0;
  std::size_t stories_used = 0;
  std::size_t stories_skipped = 0;  // fewer than n tokens
};

// Corpus-wide distinct / total n-grams. Throws if no story has n tokens.
NgramDiversity ngram_diversity_detail(const TokenizedCorpus& corpus, int n);
double ngram_diversity(const TokenizedCorpus& corpus, int n);
// Mean of per-story distinct / total, over stories with at least n tokens.
double ngram_diversity_story_mean(const TokenizedCorpus& corpus, int n);

// Compressor settings recorded in every report.
inline constexpr int kCompressionLevel = 6;
inline constexpr const char* kCompressorName = "zlib (DEFLATE, zlib container), level 6";

std::size_t compressed_size(std::string_view bytes);
// Stories joined with '\n', original bytes / compressed bytes.
double compression_ratio(std::span<const std::string> sample);

// Sentence BLEU: uniform-weight geometric mean of clipped n-gram precisions
// for n = 1..min(max_n, |candidate|), times the brevity penalty against the
// closest reference length (shorter wins ties). No smoothing.
double bleu(const Tokens& candidate, std::span<const Tokens> references, int max_n);

// BLEU of every story against all other stories of the sample.
std::vector<double> self_bleu_scores(const TokenizedCorpus& sample, int max_n);
double self_bleu(const TokenizedCorpus& sample, int max_n);

// Seeded uniform sample without replacement; indices sorted ascending.
std::vector<std::size_t> subsample_indices(std::size_t population, std::size_t size, std::uint64_t seed);
std::size_t fraction_to_count(std::size_t population, double fraction);

struct DiversityOptions {
  int max_ngd_n = 10;
  int bleu_max_n = 4;
  std::size_t sample_size = 1000;  // compression ratio and Self-BLEU
  std::uint64_t seed = 0;
};

struct DiversityReport {
  std::map<int, double> ngd;
  std::map<int, double> ngd_story_mean;
  double compression_ratio = 0.0;
  double self_bleu = 0.0;
  std::vector<double> self_bleu_per_story;
  std::vector<double> compression_ratio_per_story;
  std::size_t corpus_size = 0;
  std::size_t sample_size = 0;
  std::uint64_t seed = 0;
  int bleu_max_n = 4;
};

// NGD runs on the whole corpus; compression and Self-BLEU on a seeded
// sample of options.sample_size stories.
DiversityReport diversity_report(std::span<const std::string> texts, const DiversityOptions& options);

}  // namespace sstories::lexical
