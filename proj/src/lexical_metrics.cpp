#include "sstories/lexical_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include <zlib.h>

#include "sstories/errors.hpp"
#include "sstories/rng.hpp"
#include "sstories/text.hpp"

namespace sstories::lexical {

namespace {

// Unit separator sorts below every character a word token can contain, so
// comparing joined keys matches lexicographic comparison of the tuples.
constexpr char kSep = '\x1f';

std::string join_key(const Tokens& tokens, std::size_t begin, std::size_t n) {
  std::string key;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) key.push_back(kSep);
    key += tokens[begin + i];
  }
  return key;
}

std::vector<std::string> split_key(const std::string& key) {
  std::vector<std::string> out(1);
  for (char c : key) {
    if (c == kSep) {
      out.emplace_back();
    } else {
      out.back().push_back(c);
    }
  }
  return out;
}

// Every size-k sub-multiset of the tuple, each in sorted order and joined.
std::vector<std::string> sub_multisets(const std::vector<std::string>& words, std::size_t k) {
  std::vector<std::string> sorted = words;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  std::vector<std::string> keys;
  std::vector<std::size_t> idx(k);
  for (std::size_t i = 0; i < k; ++i) idx[i] = i;
  while (true) {
    std::string key;
    for (std::size_t i = 0; i < k; ++i) {
      if (i) key.push_back(kSep);
      key += sorted[idx[i]];
    }
    keys.push_back(std::move(key));
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == n - k + i - 1) --i;
    if (i == 0) break;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  return keys;
}

void check_n(int n) {
  if (n < 1) throw InvalidInput("n-gram order must be at least 1");
}

}  // namespace

TokenizedCorpus tokenize_corpus(std::span<const std::string> texts) {
  TokenizedCorpus out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(text::word_tokenize(t));
  return out;
}

NgramTable ngram_story_fractions(const TokenizedCorpus& corpus, int n) {
  check_n(n);
  if (corpus.empty()) throw InvalidInput("n-gram table of an empty corpus");
  const auto un = static_cast<std::size_t>(n);
  std::unordered_map<std::string, std::size_t> story_counts;
  std::unordered_set<std::string> seen;
  for (const auto& story : corpus) {
    if (story.size() < un) continue;
    seen.clear();
    for (std::size_t i = 0; i + un <= story.size(); ++i) {
      auto key = join_key(story, i, un);
      if (seen.insert(key).second) ++story_counts[key];
    }
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(story_counts.begin(), story_counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  NgramTable table;
  table.n = n;
  table.entries.reserve(ranked.size());
  const double stories = static_cast<double>(corpus.size());
  for (auto& [key, count] : ranked) {
    table.entries.push_back({split_key(key), count, static_cast<double>(count) / stories});
  }
  return table;
}

std::size_t overlap_words(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::string> sa = a;
  std::vector<std::string> sb = b;
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  std::vector<std::string> common;
  std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(common));
  return common.size();
}

NgramTable greedy_overlap_filter(const NgramTable& table, std::size_t limit) {
  NgramTable out;
  out.n = table.n;
  out.subsample_fraction = table.subsample_fraction;
  const std::size_t allowed = static_cast<std::size_t>(std::max(0, table.n - 2));
  // An entry is dropped iff it shares at least allowed + 1 words with a kept
  // entry, i.e. iff both contain a common sub-multiset of that size.
  const std::size_t probe = allowed + 1;
  std::unordered_set<std::string> kept_subsets;
  for (const auto& e : table.entries) {
    if (out.entries.size() >= limit) break;
    if (e.ngram.size() < probe) {
      out.entries.push_back(e);
      continue;
    }
    const auto subsets = sub_multisets(e.ngram, probe);
    const bool clash = std::any_of(subsets.begin(), subsets.end(),
                                   [&](const std::string& k) { return kept_subsets.count(k) > 0; });
    if (clash) continue;
    kept_subsets.insert(subsets.begin(), subsets.end());
    out.entries.push_back(e);
  }
  return out;
}

NgramDiversity ngram_diversity_detail(const TokenizedCorpus& corpus, int n) {
  check_n(n);
  const auto un = static_cast<std::size_t>(n);
  NgramDiversity d;
  std::unordered_set<std::string> distinct;
  for (const auto& story : corpus) {
    if (story.size() < un) {
      ++d.stories_skipped;
      continue;
    }
    ++d.stories_used;
    for (std::size_t i = 0; i + un <= story.size(); ++i) {
      distinct.insert(join_key(story, i, un));
      ++d.total;
    }
  }
  if (d.total == 0) throw InvalidInput("n-gram diversity: no story has " + std::to_string(n) + " tokens");
  d.distinct = distinct.size();
  d.score = static_cast<double>(d.distinct) / static_cast<double>(d.total);
  return d;
}

double ngram_diversity(const TokenizedCorpus& corpus, int n) { return ngram_diversity_detail(corpus, n).score; }

double ngram_diversity_story_mean(const TokenizedCorpus& corpus, int n) {
  check_n(n);
  const auto un = static_cast<std::size_t>(n);
  double sum = 0.0;
  std::size_t used = 0;
  std::unordered_set<std::string> distinct;
  for (const auto& story : corpus) {
    if (story.size() < un) continue;
    distinct.clear();
    const std::size_t total = story.size() - un + 1;
    for (std::size_t i = 0; i < total; ++i) distinct.insert(join_key(story, i, un));
    sum += static_cast<double>(distinct.size()) / static_cast<double>(total);
    ++used;
  }
  if (used == 0) throw InvalidInput("n-gram diversity: no story has " + std::to_string(n) + " tokens");
  return sum / static_cast<double>(used);
}

std::size_t compressed_size(std::string_view bytes) {
  uLongf bound = compressBound(static_cast<uLong>(bytes.size()));
  std::string buf(bound, '\0');
  const int rc = compress2(reinterpret_cast<Bytef*>(buf.data()), &bound,
                           reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uLong>(bytes.size()),
                           kCompressionLevel);
  if (rc != Z_OK) throw Error("zlib compression failed with code " + std::to_string(rc));
  return bound;
}

double compression_ratio(std::span<const std::string> sample) {
  if (sample.empty()) throw InvalidInput("compression ratio of an empty sample");
  std::string joined;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    if (i) joined.push_back('\n');
    joined += sample[i];
  }
  if (joined.empty()) throw InvalidInput("compression ratio of empty text");
  return static_cast<double>(joined.size()) / static_cast<double>(compressed_size(joined));
}

double bleu(const Tokens& candidate, std::span<const Tokens> references, int max_n) {
  if (candidate.empty()) throw InvalidInput("BLEU of an empty candidate");
  if (references.empty()) throw InvalidInput("BLEU needs at least one reference");
  check_n(max_n);
  const std::size_t c = candidate.size();
  const std::size_t orders = std::min<std::size_t>(static_cast<std::size_t>(max_n), c);
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= orders; ++n) {
    std::unordered_map<std::string, std::size_t> cand_counts;
    for (std::size_t i = 0; i + n <= c; ++i) ++cand_counts[join_key(candidate, i, n)];
    std::unordered_map<std::string, std::size_t> max_ref;
    for (const auto& ref : references) {
      std::unordered_map<std::string, std::size_t> rc;
      for (std::size_t i = 0; i + n <= ref.size(); ++i) {
        auto key = join_key(ref, i, n);
        if (cand_counts.count(key)) ++rc[key];
      }
      for (const auto& [k, v] : rc) max_ref[k] = std::max(max_ref[k], v);
    }
    std::size_t clipped = 0;
    for (const auto& [k, v] : cand_counts) {
      auto it = max_ref.find(k);
      if (it != max_ref.end()) clipped += std::min(v, it->second);
    }
    if (clipped == 0) return 0.0;
    log_sum += std::log(static_cast<double>(clipped) / static_cast<double>(c - n + 1));
  }
  std::size_t r = references.front().size();
  for (const auto& ref : references) {
    const auto d = [c](std::size_t x) { return x > c ? x - c : c - x; };
    if (d(ref.size()) < d(r) || (d(ref.size()) == d(r) && ref.size() < r)) r = ref.size();
  }
  const double bp = c < r ? std::exp(1.0 - static_cast<double>(r) / static_cast<double>(c)) : 1.0;
  return bp * std::exp(log_sum / static_cast<double>(orders));
}

std::vector<double> self_bleu_scores(const TokenizedCorpus& sample, int max_n) {
  if (sample.size() < 2) throw InvalidInput("Self-BLEU needs at least two stories");
  check_n(max_n);
  const std::size_t m = sample.size();
  for (const auto& s : sample) {
    if (s.empty()) throw InvalidInput("Self-BLEU: a story has no tokens");
  }

  // For every n-gram keep the two largest per-story counts so that the
  // maximum over "all other stories" is available in O(1).
  struct Top2 {
    std::size_t c1 = 0, s1 = SIZE_MAX, c2 = 0;
  };
  std::vector<std::vector<std::unordered_map<std::string, std::size_t>>> counts(
      static_cast<std::size_t>(max_n), std::vector<std::unordered_map<std::string, std::size_t>>(m));
  std::vector<std::unordered_map<std::string, Top2>> tops(static_cast<std::size_t>(max_n));
  for (std::size_t n = 1; n <= static_cast<std::size_t>(max_n); ++n) {
    auto& top = tops[n - 1];
    for (std::size_t s = 0; s < m; ++s) {
      auto& cnt = counts[n - 1][s];
      const auto& toks = sample[s];
      for (std::size_t i = 0; i + n <= toks.size(); ++i) ++cnt[join_key(toks, i, n)];
      for (const auto& [k, v] : cnt) {
        auto& t = top[k];
        if (v > t.c1) {
          t.c2 = t.c1;
          t.c1 = v;
          t.s1 = s;
        } else if (v > t.c2) {
          t.c2 = v;
        }
      }
    }
  }

  std::vector<std::size_t> lengths(m);
  for (std::size_t s = 0; s < m; ++s) lengths[s] = sample[s].size();
  std::vector<std::size_t> sorted_lengths = lengths;
  std::sort(sorted_lengths.begin(), sorted_lengths.end());

  std::vector<double> scores(m);
  for (std::size_t s = 0; s < m; ++s) {
    const std::size_t c = lengths[s];
    const std::size_t orders = std::min<std::size_t>(static_cast<std::size_t>(max_n), c);
    double log_sum = 0.0;
    bool zero = false;
    for (std::size_t n = 1; n <= orders && !zero; ++n) {
      std::size_t clipped = 0;
      for (const auto& [k, v] : counts[n - 1][s]) {
        const auto& t = tops[n - 1].at(k);
        const std::size_t others = t.s1 == s ? t.c2 : t.c1;
        clipped += std::min(v, others);
      }
      if (clipped == 0) {
        zero = true;
      } else {
        log_sum += std::log(static_cast<double>(clipped) / static_cast<double>(c - n + 1));
      }
    }
    if (zero) {
      scores[s] = 0.0;
      continue;
    }
    // Closest other length; the shorter one wins ties.
    std::size_t r;
    const auto lo = std::lower_bound(sorted_lengths.begin(), sorted_lengths.end(), c);
    const auto hi = std::upper_bound(sorted_lengths.begin(), sorted_lengths.end(), c);
    if (hi - lo >= 2) {
      r = c;
    } else {
      const bool has_below = lo != sorted_lengths.begin();
      const bool has_above = hi != sorted_lengths.end();
      if (has_below && has_above) {
        const std::size_t below = *(lo - 1);
        const std::size_t above = *hi;
        r = (c - below <= above - c) ? below : above;
      } else {
        r = has_below ? *(lo - 1) : *hi;
      }
    }
    const double bp = c < r ? std::exp(1.0 - static_cast<double>(r) / static_cast<double>(c)) : 1.0;
    scores[s] = bp * std::exp(log_sum / static_cast<double>(orders));
  }
  return scores;
}

double self_bleu(const TokenizedCorpus& sample, int max_n) {
  const auto scores = self_bleu_scores(sample, max_n);
  double sum = 0.0;
  for (double s : scores) sum += s;
  return sum / static_cast<double>(scores.size());
}

std::vector<std::size_t> subsample_indices(std::size_t population, std::size_t size, std::uint64_t seed) {
  Rng rng(seed);
  auto idx = sample_without_replacement(rng, population, size);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::size_t fraction_to_count(std::size_t population, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw InvalidInput("subsample fraction must lie in (0, 1]");
  const auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(population)));
  return std::max<std::size_t>(1, std::min(k, population));
}

DiversityReport diversity_report(std::span<const std::string> texts, const DiversityOptions& options) {
  if (texts.empty()) throw InvalidInput("diversity report of an empty corpus");
  DiversityReport r;
  r.corpus_size = texts.size();
  r.seed = options.seed;
  r.bleu_max_n = options.bleu_max_n;
  const auto corpus = tokenize_corpus(texts);
  for (int n = 1; n <= options.max_ngd_n; ++n) {
    try {
      r.ngd[n] = ngram_diversity(corpus, n);
      r.ngd_story_mean[n] = ngram_diversity_story_mean(corpus, n);
    } catch (const InvalidInput&) {
      // Orders longer than every story are left out of the report.
    }
  }
  const auto idx = subsample_indices(texts.size(), std::min(options.sample_size, texts.size()), options.seed);
  r.sample_size = idx.size();
  std::vector<std::string> sample_texts;
  TokenizedCorpus sample_tokens;
  for (auto i : idx) {
    if (corpus[i].empty()) continue;
    sample_texts.push_back(texts[i]);
    sample_tokens.push_back(corpus[i]);
  }
  r.compression_ratio = compression_ratio(sample_texts);
  for (const auto& t : sample_texts) {
    const std::string one[] = {t};
    r.compression_ratio_per_story.push_back(compression_ratio(one));
  }
  if (sample_tokens.size() >= 2) {
    r.self_bleu_per_story = self_bleu_scores(sample_tokens, options.bleu_max_n);
    double sum = 0.0;
    for (double s : r.self_bleu_per_story) sum += s;
    r.self_bleu = sum / static_cast<double>(r.self_bleu_per_story.size());
  }
  return r;
}

}  // namespace sstories::lexical
