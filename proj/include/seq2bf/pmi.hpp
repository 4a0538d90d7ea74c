#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "seq2bf/corpus.hpp"

namespace seq2bf {

/// Word-level co-occurrence counts for keyword prediction.
///
/// Counting is by presence: a word repeated inside one utterance counts once
/// for that pair. reply_count holds an entry (possibly zero) for every
/// lexicon term and nothing else, so the table doubles as the lexicon
/// fingerprint checked by merge_stats.
struct CooccurrenceStats {
  double smoothing_alpha = 1.0;
  uint64_t pair_total = 0;
  std::map<std::string, uint64_t, std::less<>> query_count;
  std::map<std::string, uint64_t, std::less<>> reply_count;
  std::map<std::pair<std::string, std::string>, uint64_t> joint_count;

  size_t query_vocab_size() const { return query_count.size(); }
  size_t reply_term_count() const { return reply_count.size(); }

  uint64_t query(std::string_view word) const;
  uint64_t reply(std::string_view term) const;
  uint64_t joint(const std::string& word, const std::string& term) const;

  void save(const std::filesystem::path& path) const;
  static CooccurrenceStats load(const std::filesystem::path& path);
  void write(std::ostream& out) const;
  static CooccurrenceStats read(std::istream& in);

  bool operator==(const CooccurrenceStats&) const = default;
};

CooccurrenceStats empty_stats(const NounLexicon& lexicon, double smoothing_alpha = 1.0);

/// Adds one pair to the counts in place.
void accumulate(CooccurrenceStats& stats, const DialoguePair& pair);

CooccurrenceStats accumulate_stats(std::span<const DialoguePair> pairs, const NounLexicon& lexicon,
                                   double smoothing_alpha = 1.0);

/// Pointwise sum. Throws ConfigError when the lexicons or alphas differ.
CooccurrenceStats merge_stats(const CooccurrenceStats& a, const CooccurrenceStats& b);

/// Smoothed log p(w_q | w_r) / p(w_q), in nats.
double pmi_score(const CooccurrenceStats& stats, const std::string& query_word, const std::string& term);

/// Sum of pmi_score over the distinct query words. Empty query scores 0.
double query_pmi(const CooccurrenceStats& stats, std::span<const std::string> query_words, const std::string& term);

struct KeywordPrediction {
  std::string term;
  double score = 0.0;
  std::vector<std::pair<std::string, double>> per_word;
};

/// Top-k lexicon terms by query_pmi, descending. Scores are rounded to
/// 1e-9 nats before comparison. Ties go to the larger
/// reply_count, then to the smaller term in code-point order.
/// Throws ConfigError on an empty lexicon.
std::vector<KeywordPrediction> predict_keyword(const CooccurrenceStats& stats, std::span<const std::string> query_words,
                                               const NounLexicon& lexicon, size_t k);

/// Distinct words in first-occurrence order.
std::vector<std::string> distinct_words(std::span<const std::string> words);

}  // namespace seq2bf
