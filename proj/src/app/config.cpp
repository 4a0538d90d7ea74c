#include "seq2bf/app/config.hpp"

#include <cstdio>
#include <sstream>

#include "seq2bf/error.hpp"
#include "seq2bf/optim.hpp"

namespace seq2bf::app {

void RunConfig::apply_published_defaults() {
  published_defaults = true;
  embed_dim = 500;
  hidden_dim = 500;
  learning_rate = 0.002;
  decay = 0.99;
  epsilon = 1e-8;
  batch_size = 50;
  init_range = 0.08;
  vocab_cap = 4000;
  embedding_learning_rate = literal_embedding_rate(0.002, 1e-8);
}

void RunConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw ConfigError(std::string(name) + " must be positive");
  };
  positive(static_cast<double>(embed_dim), "embed_dim");
  positive(static_cast<double>(hidden_dim), "hidden_dim");
  positive(learning_rate, "learning_rate");
  positive(epsilon, "epsilon");
  positive(embedding_learning_rate, "embedding_learning_rate");
  positive(init_range, "init_range");
  positive(static_cast<double>(batch_size), "batch_size");
  positive(static_cast<double>(epochs), "epochs");
  positive(static_cast<double>(beam_width), "beam_width");
  positive(static_cast<double>(max_len), "max_len");
  positive(static_cast<double>(candidates_k), "candidates");
  if (!(decay > 0.0 && decay < 1.0)) throw ConfigError("decay must lie in (0, 1)");
  if (clip_norm < 0.0) throw ConfigError("clip_norm must be nonnegative (0 disables clipping)");
  if (pmi_alpha < 0.0) throw ConfigError("pmi_alpha must be nonnegative");
  if (vocab_cap < 5) throw ConfigError("vocab_cap must be at least 5");
  if (decode_mode != "greedy" && decode_mode != "beam") throw ConfigError("decode must be greedy or beam");
  if (port < 0 || port > 65535) throw ConfigError("port out of range");
}

std::string RunConfig::to_text() const {
  std::ostringstream out;
  out.precision(17);
  auto path = [&](const char* key, const std::string& v) {
    if (!v.empty()) out << key << '=' << v << '\n';
  };
  for (const auto& c : corpus) path("corpus", c);
  path("valid", valid);
  path("lexicon", lexicon);
  path("lexicon_out", lexicon_out);
  path("vocab", vocab);
  path("stats", stats);
  path("checkpoint", checkpoint);
  path("bundle", bundle);
  path("input", input);
  path("output", output);
  path("candidates", candidates);
  path("references", references);
  path("report", report);
  path("epoch_log", epoch_log);
  out << "paper_defaults=" << (published_defaults ? "true" : "false") << '\n';
  out << "vocab_cap=" << vocab_cap << '\n';
  out << "embed_dim=" << embed_dim << '\n';
  out << "hidden_dim=" << hidden_dim << '\n';
  out << "learning_rate=" << learning_rate << '\n';
  out << "decay=" << decay << '\n';
  out << "epsilon=" << epsilon << '\n';
  out << "embedding_learning_rate=" << embedding_learning_rate << '\n';
  out << "init_range=" << init_range << '\n';
  out << "clip_norm=" << clip_norm << '\n';
  out << "batch_size=" << batch_size << '\n';
  out << "epochs=" << epochs << '\n';
  out << "patience=" << patience << '\n';
  out << "pmi_alpha=" << pmi_alpha << '\n';
  out << "lexicon_min_count=" << lexicon_min_count << '\n';
  out << "decode=" << decode_mode << '\n';
  out << "beam_width=" << beam_width << '\n';
  out << "max_len=" << max_len << '\n';
  out << "candidates=" << candidates_k << '\n';
  out << "host=" << host << '\n';
  out << "port=" << port << '\n';
  out << "seed=" << seed << '\n';
  return out.str();
}

std::string RunConfig::hash() const {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : to_text()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

DecodeConfig RunConfig::decode_config() const {
  DecodeConfig cfg;
  cfg.mode = decode_mode == "beam" ? DecodeMode::kBeam : DecodeMode::kGreedy;
  cfg.beam_width = beam_width;
  cfg.max_len = max_len;
  return cfg;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.patience = patience;
  cfg.batch_size = batch_size;
  cfg.learning_rate = learning_rate;
  cfg.decay = decay;
  cfg.epsilon = epsilon;
  cfg.embedding_learning_rate = embedding_learning_rate;
  cfg.clip_norm = clip_norm;
  cfg.seed = seed;
  cfg.valid_max_len = max_len;
  return cfg;
}

}  // namespace seq2bf::app
