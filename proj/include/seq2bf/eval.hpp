#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "seq2bf/corpus.hpp"
#include "seq2bf/reply.hpp"

namespace seq2bf {

/// Character unigram distribution used by the entropy metric.
class UnigramModel {
 public:
  /// Add-one estimate over the vocab characters plus one UNK bucket that
  /// absorbs every out-of-vocab character.
  static UnigramModel from_replies(std::span<const std::u32string> replies, const Vocab& vocab);
  /// Explicit table; characters outside it get unk_probability.
  static UnigramModel from_probabilities(std::map<char32_t, double> probs, double unk_probability = 0.0);

  double prob(char32_t c) const;
  /// Sum over the support including the UNK bucket.
  double total_mass() const;

 private:
  std::map<char32_t, double> probs_;
  double unk_ = 0.0;
};

/// Mean -log2 p(c) over every character of every reply.
/// Throws Error when the replies hold no characters.
double entropy(std::span<const std::u32string> replies, const UnigramModel& unigram);

struct DecomposedEntropy {
  double keyword_bits = 0.0;
  double remaining_bits = 0.0;
  size_t keyword_chars = 0;
  size_t remaining_chars = 0;
};

/// Splits each reply into keyword characters and the rest and reports the
/// entropy of each part. Every result must carry a keyword.
DecomposedEntropy decomposed_entropy(std::span<const ReplyResult> results, const UnigramModel& unigram);

double avg_length(std::span<const std::u32string> replies);

/// Corpus-level BLEU with 1/2-1/2 weights on clipped unigram and bigram
/// precision and the brevity penalty. No smoothing: zero bigram matches give
/// 0. When neither side holds any bigram the bigram precision is taken as 1.
double bleu2_char(std::span<const std::u32string> candidates, std::span<const std::u32string> references);

struct MetricsReport {
  size_t reply_count = 0;
  double avg_length = 0.0;
  double entropy = 0.0;
  std::optional<double> keyword_entropy;
  std::optional<double> remaining_entropy;
  std::optional<double> bleu2;
  std::string config_hash;

  std::string to_key_value() const;
  std::string to_table() const;
};

}  // namespace seq2bf
