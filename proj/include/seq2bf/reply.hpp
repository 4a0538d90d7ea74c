#pragma once

#include <optional>
#include <string>
#include <vector>

#include "seq2bf/pmi.hpp"

namespace seq2bf {

/// Output of the two-step reply pipeline.
struct ReplyResult {
  std::u32string reply_chars;
  /// Keyword term; empty for the no-keyword ablation and for degraded results.
  std::optional<std::string> keyword;
  /// 1-based character index of the keyword in reply_chars; 0 without keyword.
  size_t keyword_start = 0;
  double backward_logprob = 0.0;
  double forward_logprob = 0.0;
  std::optional<double> pmi_score;
  /// Set when every keyword candidate was unusable and the reply fell back
  /// to plain forward decoding.
  bool no_keyword = false;
  std::vector<KeywordPrediction> candidates;

  std::string reply_utf8() const;
  /// Number of characters in the keyword (0 without keyword).
  size_t keyword_length() const;
};

}  // namespace seq2bf
