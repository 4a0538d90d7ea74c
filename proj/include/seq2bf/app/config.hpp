#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "seq2bf/s2s.hpp"

namespace seq2bf::app {

/// Everything a command run depends on. Paths are left empty when a command
/// does not use them.
struct RunConfig {
  // paths
  std::vector<std::string> corpus;
  std::string valid;
  std::string lexicon;
  std::string lexicon_out;
  std::string vocab;
  std::string stats;
  std::string checkpoint;
  std::string bundle;
  std::string input;
  std::string output;
  std::string candidates;
  std::string references;
  std::string report;
  std::string epoch_log;

  // model and optimizer
  size_t vocab_cap = 4000;
  size_t embed_dim = 64;
  size_t hidden_dim = 64;
  double learning_rate = 0.002;
  double decay = 0.99;
  double epsilon = 1e-8;
  double embedding_learning_rate = 0.1;
  double init_range = 0.08;
  double clip_norm = 5.0;
  size_t batch_size = 50;
  size_t epochs = 10;
  size_t patience = 3;
  double pmi_alpha = 1.0;
  size_t lexicon_min_count = 1;
  bool published_defaults = false;

  // decoding
  std::string decode_mode = "greedy";
  size_t beam_width = 5;
  size_t max_len = 40;
  size_t candidates_k = 5;

  // service
  std::string host = "127.0.0.1";
  int port = 8080;

  uint64_t seed = 1;

  /// Pins every published optimization constant, including the 500/500
  /// dims and the literal embedding rate 0.002/sqrt(1e-8).
  void apply_published_defaults();

  /// Throws ConfigError when a numeric field is out of range.
  void validate() const;

  /// `key=value` lines in a fixed order.
  std::string to_text() const;
  /// 16 hex digits of an FNV-1a hash of to_text().
  std::string hash() const;

  DecodeConfig decode_config() const;
  TrainConfig train_config() const;
};

}  // namespace seq2bf::app
