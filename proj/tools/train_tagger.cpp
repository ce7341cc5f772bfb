// Offline trainer for the shipped POS tagger weights.
//
//   train_tagger --lexicon data/pos/lexicon.tsv --train data/pos/train.tsv \
//                --out data/pos/tagger_weights.json [--gold data/pos/gold.tsv]

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <unordered_map>

#include <CLI11.hpp>

#include "sstories/errors.hpp"
#include "sstories/pos_tagger.hpp"

namespace {

std::unordered_map<std::string, std::string> read_lexicon(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw sstories::IoError("cannot open lexicon " + path);
  std::unordered_map<std::string, std::string> lex;
  std::string line;
  while (std::getline(in, line)) {
    const auto tab = line.find('\t');
    if (line.empty() || line[0] == '#' || tab == std::string::npos) continue;
    lex.emplace(line.substr(0, tab), line.substr(tab + 1));
  }
  return lex;
}

double accuracy(const sstories::pos::PosTagger& tagger, const std::vector<sstories::pos::TaggedSentence>& gold,
                bool verbose) {
  std::size_t total = 0, right = 0;
  for (const auto& s : gold) {
    const auto got = tagger.tag(s.tokens);
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      ++total;
      if (got[i] == s.tags[i]) {
        ++right;
      } else if (verbose) {
        std::cerr << "  " << s.tokens[i] << ": gold " << s.tags[i] << ", got " << got[i] << "\n";
      }
    }
  }
  return total ? static_cast<double>(right) / static_cast<double>(total) : 0.0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"train the averaged-perceptron tagger"};
  std::string lexicon_path, train_path, out_path, gold_path;
  int iterations = 10;
  std::uint64_t seed = 1;
  bool verbose = false;
  app.add_option("--lexicon", lexicon_path, "word<TAB>tag lexicon")->required();
  app.add_option("--train", train_path, "word/TAG training sentences")->required();
  app.add_option("--out", out_path, "weights file to write")->required();
  app.add_option("--gold", gold_path, "held-out sentences to score");
  app.add_option("--iterations", iterations);
  app.add_option("--seed", seed);
  app.add_flag("-v,--verbose", verbose, "list gold errors");
  CLI11_PARSE(app, argc, argv);

  try {
    const auto sentences = sstories::pos::read_tagged_file(train_path);
    auto tagger = sstories::pos::PosTagger::train(sentences, read_lexicon(lexicon_path), {iterations, seed});
    tagger.save(out_path);
    std::printf("trained on %zu sentences, %zu tags\n", sentences.size(), tagger.tags().size());
    std::printf("train accuracy %.4f\n", accuracy(tagger, sentences, false));
    if (!gold_path.empty()) {
      std::printf("gold accuracy %.4f\n", accuracy(tagger, sstories::pos::read_tagged_file(gold_path), verbose));
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "train_tagger: %s\n", e.what());
    return 1;
  }
  return 0;
}
