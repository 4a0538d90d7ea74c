#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "seq2bf/checkpoint.hpp"
#include "seq2bf/corpus.hpp"
#include "seq2bf/gru.hpp"
#include "seq2bf/tape.hpp"
#include "seq2bf/tensor.hpp"

namespace seq2bf {

struct ModelDims {
  size_t vocab = 0;
  size_t embed = 64;
  size_t hidden = 64;
};

/// GRU encoder-decoder without attention. The decoder starts from the
/// encoder's final state; one embedding table serves both sides.
class EncoderDecoder {
 public:
  EncoderDecoder() = default;
  explicit EncoderDecoder(ModelDims dims);

  EncoderDecoder(const EncoderDecoder&) = default;
  EncoderDecoder& operator=(const EncoderDecoder&) = default;
  EncoderDecoder(EncoderDecoder&&) = default;
  EncoderDecoder& operator=(EncoderDecoder&&) = default;

  const ModelDims& dims() const { return dims_; }

  /// Every tensor, embedding first.
  ParamList params();
  /// Every tensor except the embedding table.
  ParamList dense_params();

  void init_uniform(uint64_t seed, float range = 0.08f);
  void zero_grad() const;

  EmbeddingTable embed;
  GruCell enc;
  GruCell dec;
  Tensor proj_w;  // vocab x hidden
  Tensor proj_b;  // vocab

 private:
  ModelDims dims_;
};

/// Writes the model with `component`, dims and vocab hash in the metadata.
void save_model(const std::filesystem::path& path, EncoderDecoder& model, const std::string& component,
                uint64_t vocab_hash, Metadata extra = {});

struct LoadedModel {
  EncoderDecoder model;
  Metadata metadata;
};

/// Loads a checkpoint. When expected_vocab_hash is nonzero it must match the
/// hash recorded in the metadata.
LoadedModel load_model(const std::filesystem::path& path, uint64_t expected_vocab_hash = 0);

using State = std::vector<double>;

/// Final encoder state; the zero vector for an empty query.
/// Throws EncodingError for an id outside the vocab.
State encode(const EncoderDecoder& model, std::span<const TokenId> query);

struct StepOutput {
  std::vector<double> log_probs;
  State state;
};

/// Feeds prev_token to the decoder and returns the next-token distribution
/// (as log-probabilities) with the new state.
StepOutput decode_step(const EncoderDecoder& model, TokenId prev_token, const State& state);

enum class DecodeMode { kGreedy, kBeam };

struct DecodeConfig {
  DecodeMode mode = DecodeMode::kGreedy;
  size_t beam_width = 5;
  /// Budget of freely generated tokens after the forced prefix.
  size_t max_len = 40;
  IdSeq forced_prefix;
};

struct Hypothesis {
  /// Forced prefix followed by generated tokens; EOS excluded.
  IdSeq tokens;
  double logprob = 0.0;
  bool finished = false;
  /// Log-probability of each emitted token, EOS included when finished.
  std::vector<double> step_logprobs;
};

Hypothesis decode_greedy(const EncoderDecoder& model, std::span<const TokenId> query, const DecodeConfig& cfg);

struct BeamResult {
  Hypothesis best;
  /// Retired and surviving hypotheses, best first.
  std::vector<Hypothesis> beam;
};

BeamResult decode_beam(const EncoderDecoder& model, std::span<const TokenId> query, const DecodeConfig& cfg);

/// Dispatches on cfg.mode.
Hypothesis decode(const EncoderDecoder& model, std::span<const TokenId> query, const DecodeConfig& cfg);

/// Teacher-forced per-step log-probabilities of reply tokens, followed by
/// the EOS factor when append_eos is set.
std::vector<double> step_logprobs(const EncoderDecoder& model, std::span<const TokenId> query,
                                  std::span<const TokenId> reply, bool append_eos = true);

/// log p(reply, EOS | query).
double sequence_logprob(const EncoderDecoder& model, std::span<const TokenId> query, std::span<const TokenId> reply);

/// Records the teacher-forced cross-entropy of target (EOS appended) on the
/// tape and returns the scalar loss node.
Tape::Var sequence_loss(Tape& tape, const EncoderDecoder& model, std::span<const TokenId> query,
                        std::span<const TokenId> target);

struct EpochLog {
  size_t epoch = 0;
  double train_xent = 0.0;  // nats per target token
  double valid_bleu2 = 0.0;
};

struct TrainConfig {
  size_t epochs = 10;
  size_t patience = 3;
  size_t batch_size = 50;
  double learning_rate = 0.002;
  double decay = 0.99;
  double epsilon = 1e-8;
  double embedding_learning_rate = 0.1;
  /// Global-norm gradient clip; 0 disables it.
  double clip_norm = 5.0;
  uint64_t seed = 1;
  /// Leading target tokens forced during validation decoding (1 for the
  /// backward generator, whose first target token is the split character).
  size_t valid_forced_tokens = 0;
  size_t valid_max_len = 40;
  std::function<void(const EpochLog&)> on_epoch;
};

struct TrainResult {
  std::vector<EpochLog> log;
  size_t best_epoch = 0;
  double best_bleu2 = 0.0;
};

/// Supplies the training examples of an epoch (1-based), letting the
/// backward generator resample split points every epoch.
using ExampleSource = std::function<std::vector<Example>(size_t epoch)>;

/// Trains with rmsprop on dense parameters and SGD on touched embedding rows,
/// keeps the parameters of the epoch with the best validation char-BLEU-2
/// and stops after `patience` epochs without improvement. On return the
/// model holds the best epoch's parameters.
/// Throws NumericalError naming the batch when a loss is not finite.
TrainResult train(EncoderDecoder& model, const ExampleSource& examples, std::span<const Example> valid,
                  const TrainConfig& cfg);

/// Corpus char-BLEU-2 of greedy decodes against the validation targets.
double validation_bleu2(const EncoderDecoder& model, std::span<const Example> valid, size_t forced_tokens,
                        size_t max_len);

}  // namespace seq2bf
