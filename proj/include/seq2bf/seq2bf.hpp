#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "seq2bf/corpus.hpp"
#include "seq2bf/pmi.hpp"
#include "seq2bf/random.hpp"
#include "seq2bf/reply.hpp"
#include "seq2bf/s2s.hpp"

namespace seq2bf {

/// Training example for the backward generator. For a reply r_1..r_m and a
/// split index k (1-based), target_ids = r_k, r_{k-1}, ..., r_1, EOS.
struct BackwardExample {
  IdSeq query_ids;
  IdSeq target_ids;
  size_t split = 0;
};

/// Draws k uniformly from 1..m. Returns nullopt for an empty reply.
std::optional<BackwardExample> make_backward_example(const DialoguePair& pair, const Vocab& vocab, Rng& rng);

/// Backward example at a fixed split. k must lie in 1..m.
BackwardExample backward_example_at(const DialoguePair& pair, const Vocab& vocab, size_t k);

/// One freshly sampled backward example per pair (empty replies skipped),
/// as EOS-free training examples.
std::vector<Example> sample_backward_examples(std::span<const DialoguePair> pairs, const Vocab& vocab, uint64_t seed);

/// The two generators. They never share tensors.
struct Seq2BF {
  EncoderDecoder backward;
  EncoderDecoder forward;
  Vocab vocab;
};

/// True when any tensor storage of a is also used by b.
bool shares_tensors(EncoderDecoder& a, EncoderDecoder& b);

struct HalfResult {
  IdSeq tokens;
  /// Log-probability of the freely generated tokens only (forced factors
  /// excluded), EOS included when emitted.
  double logprob = 0.0;
};

/// First half r_1..r_k of a reply. With a keyword, its characters are forced
/// into the backward decoder in reversed order so that they read normally
/// after the final reversal; without one the decoder starts from BOS alone.
/// Throws KeywordError when a keyword character is outside the vocab.
HalfResult generate_backward(const EncoderDecoder& backward, const Vocab& vocab, std::span<const TokenId> query_ids,
                             const std::optional<std::string>& keyword, const DecodeConfig& cfg);

/// Full reply: first_half forced in normal order, then free continuation.
HalfResult generate_forward(const EncoderDecoder& forward, std::span<const TokenId> query_ids,
                            std::span<const TokenId> first_half, const DecodeConfig& cfg);

struct ReplyConfig {
  DecodeConfig decode;
  /// Predicted keywords reported alongside the reply.
  size_t candidates = 5;
  /// false runs the no-keyword ablation: free backward decode from BOS.
  bool use_keyword = true;
};

/// Step I (PMI keyword) then Step II (backward half, forward completion).
/// Unusable keywords fall through to the next candidate; when none is
/// usable the reply is a plain forward decode flagged no_keyword.
ReplyResult reply(const Seq2BF& model, const CooccurrenceStats& stats, const NounLexicon& lexicon,
                  std::span<const std::string> query_words, const ReplyConfig& cfg);

/// Backward and forward teacher-forced log-probability of a reply split at
/// k (1-based), excluding the factors of the forced tokens.
double joint_logprob(const Seq2BF& model, std::span<const TokenId> query_ids, std::span<const TokenId> reply_ids,
                     size_t k);

}  // namespace seq2bf
