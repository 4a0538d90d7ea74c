#pragma once

// Synthetic corpora and helpers shared by the unit and acceptance suites.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "seq2bf/corpus.hpp"
#include "seq2bf/pmi.hpp"
#include "seq2bf/random.hpp"
#include "seq2bf/s2s.hpp"
#include "seq2bf/seq2bf.hpp"

namespace seq2bf::testing {

inline DialoguePair pair_of(const std::string& query, const std::string& reply) {
  return *parse_pair_line(query + "\t" + reply);
}

inline std::vector<DialoguePair> pairs_of(std::initializer_list<std::pair<const char*, const char*>> lines) {
  std::vector<DialoguePair> out;
  for (const auto& [q, r] : lines) out.push_back(pair_of(q, r));
  return out;
}

/// Random lowercase word of the given length.
inline std::string random_word(Rng& rng, size_t len, std::string_view alphabet = "abcdefghijklmnopqrstuvwxyz") {
  std::string w;
  for (size_t i = 0; i < len; ++i) w.push_back(alphabet[uniform_index(rng, alphabet.size())]);
  return w;
}

/// n pairs with distinct queries; each reply is two short words.
inline std::vector<DialoguePair> memorization_corpus(size_t n, uint64_t seed) {
  Rng rng(seed);
  std::set<std::string> seen;
  std::vector<DialoguePair> out;
  while (out.size() < n) {
    const std::string q = random_word(rng, 2 + uniform_index(rng, 2), "abcdefgh") + " " +
                          random_word(rng, 2 + uniform_index(rng, 2), "abcdefgh");
    if (!seen.insert(q).second) continue;
    const std::string r = random_word(rng, 2 + uniform_index(rng, 2), "ijklmnop") + " " +
                          random_word(rng, 2 + uniform_index(rng, 2), "ijklmnop");
    out.push_back(pair_of(q, r));
  }
  return out;
}

/// Three families whose keywords sit at the start, in the middle and at the
/// end of the reply.
inline std::vector<DialoguePair> position_corpus() {
  return pairs_of({
      {"rain today", "umbrella ok"},
      {"heavy rain", "umbrella ok"},
      {"rain again", "umbrella ok"},
      {"cold wind", "wear coat now"},
      {"so cold", "wear coat now"},
      {"cold night", "wear coat now"},
      {"hungry now", "eat some soup"},
      {"so hungry", "eat some soup"},
      {"hungry again", "eat some soup"},
  });
}

inline std::vector<std::string> position_lexicon_terms() { return {"umbrella", "coat", "soup"}; }

struct TrainedSeq2BF {
  Seq2BF model;
  CooccurrenceStats stats;
  NounLexicon lexicon;
};

inline TrainConfig fast_train_config(size_t epochs, uint64_t seed) {
  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.patience = epochs;
  cfg.batch_size = 4;
  cfg.learning_rate = 0.01;
  cfg.embedding_learning_rate = 0.1;
  cfg.seed = seed;
  return cfg;
}

/// Trains both generators on pairs. The backward generator resamples its
/// split points every epoch.
inline TrainedSeq2BF train_seq2bf(const std::vector<DialoguePair>& pairs, const std::vector<std::string>& terms,
                                  ModelDims dims, size_t epochs, uint64_t seed) {
  TrainedSeq2BF out;
  out.model.vocab = build_vocab(pairs, 4000);
  const Vocab& vocab = out.model.vocab;
  dims.vocab = vocab.size();
  out.lexicon = make_lexicon(terms, vocab, pairs);
  out.stats = accumulate_stats(pairs, out.lexicon);

  std::vector<Example> forward_examples;
  for (const auto& p : pairs) forward_examples.push_back(make_example(p, vocab));

  out.model.forward = EncoderDecoder(dims);
  out.model.forward.init_uniform(seed);
  train(out.model.forward, [&](size_t) { return forward_examples; }, {}, fast_train_config(epochs, seed));

  out.model.backward = EncoderDecoder(dims);
  out.model.backward.init_uniform(seed + 1);
  train(out.model.backward, [&](size_t epoch) { return sample_backward_examples(pairs, vocab, seed * 7919 + epoch); },
        {}, fast_train_config(epochs, seed + 1));
  return out;
}

/// Topic queries answered by two generic replies over common characters
/// and one reply naming a topic noun spelled with rare characters.
inline std::vector<DialoguePair> rare_noun_corpus(size_t topics, uint64_t seed, std::vector<std::string>* nouns) {
  Rng rng(seed);
  const std::vector<std::string> generic{"ok i see", "yes i know"};
  const std::vector<std::string> frames{"i like the ", "look at my ", "the new "};
  std::vector<DialoguePair> out;
  std::set<std::string> used;
  for (size_t t = 0; t < topics; ++t) {
    std::string topic;
    do {
      topic = random_word(rng, 4, "abcdefghijklmnopqrstuvwxyz");
    } while (!used.insert(topic).second);
    std::string noun;
    do {
      noun = random_word(rng, 3, "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789");
    } while (!used.insert(noun).second);
    nouns->push_back(noun);
    const std::string query = "what about " + topic;
    for (const auto& g : generic) out.push_back(pair_of(query, g));
    out.push_back(pair_of(query, frames[t % frames.size()] + noun));
  }
  return out;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("seq2bf_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

}  // namespace seq2bf::testing
