#include "seq2bf/eval.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <unordered_map>

#include "seq2bf/error.hpp"
#include "seq2bf/utf8.hpp"

namespace seq2bf {

std::string ReplyResult::reply_utf8() const { return utf8::encode(reply_chars); }

size_t ReplyResult::keyword_length() const { return keyword ? utf8::decode(*keyword).size() : 0; }

// ---------------------------------------------------------------------------

UnigramModel UnigramModel::from_replies(std::span<const std::u32string> replies, const Vocab& vocab) {
  std::map<char32_t, uint64_t> counts;
  uint64_t unk = 0;
  uint64_t total = 0;
  for (char32_t c : vocab.characters()) counts[c] = 0;
  for (const auto& r : replies) {
    for (char32_t c : r) {
      auto it = counts.find(c);
      if (it == counts.end()) {
        ++unk;
      } else {
        ++it->second;
      }
      ++total;
    }
  }
  const double denom = static_cast<double>(total + counts.size() + 1);
  UnigramModel m;
  for (const auto& [c, n] : counts) m.probs_[c] = (static_cast<double>(n) + 1.0) / denom;
  m.unk_ = (static_cast<double>(unk) + 1.0) / denom;
  return m;
}

UnigramModel UnigramModel::from_probabilities(std::map<char32_t, double> probs, double unk_probability) {
  UnigramModel m;
  m.probs_ = std::move(probs);
  m.unk_ = unk_probability;
  return m;
}

double UnigramModel::prob(char32_t c) const {
  auto it = probs_.find(c);
  return it == probs_.end() ? unk_ : it->second;
}

double UnigramModel::total_mass() const {
  double s = unk_;
  for (const auto& [c, p] : probs_) s += p;
  return s;
}

double entropy(std::span<const std::u32string> replies, const UnigramModel& unigram) {
  double bits = 0.0;
  size_t count = 0;
  for (const auto& r : replies) {
    for (char32_t c : r) bits -= std::log2(unigram.prob(c));
    count += r.size();
  }
  if (count == 0) throw Error("entropy is undefined over zero characters");
  return bits / static_cast<double>(count);
}

DecomposedEntropy decomposed_entropy(std::span<const ReplyResult> results, const UnigramModel& unigram) {
  std::u32string keyword_chars;
  std::u32string remaining_chars;
  for (const auto& r : results) {
    if (!r.keyword || r.keyword_start == 0) throw Error("decomposed entropy needs keyword-bearing results");
    const size_t begin = r.keyword_start - 1;
    const size_t len = r.keyword_length();
    if (begin + len > r.reply_chars.size()) throw Error("keyword span outside reply");
    keyword_chars += r.reply_chars.substr(begin, len);
    remaining_chars += r.reply_chars.substr(0, begin);
    remaining_chars += r.reply_chars.substr(begin + len);
  }
  DecomposedEntropy out;
  out.keyword_chars = keyword_chars.size();
  out.remaining_chars = remaining_chars.size();
  if (!keyword_chars.empty()) out.keyword_bits = entropy(std::span(&keyword_chars, 1), unigram);
  if (!remaining_chars.empty()) out.remaining_bits = entropy(std::span(&remaining_chars, 1), unigram);
  return out;
}

double avg_length(std::span<const std::u32string> replies) {
  if (replies.empty()) throw Error("average length of an empty reply set");
  double total = 0.0;
  for (const auto& r : replies) total += static_cast<double>(r.size());
  return total / static_cast<double>(replies.size());
}

namespace {

struct NgramTally {
  uint64_t matched = 0;
  uint64_t total = 0;
  uint64_t reference_total = 0;
};

template <size_t N>
void tally(const std::u32string& cand, const std::u32string& ref, NgramTally& out) {
  auto grams = [](const std::u32string& s) {
    std::map<std::u32string, uint64_t> m;
    for (size_t i = 0; i + N <= s.size(); ++i) ++m[s.substr(i, N)];
    return m;
  };
  const auto c = grams(cand);
  const auto r = grams(ref);
  for (const auto& [g, n] : c) {
    auto it = r.find(g);
    out.matched += std::min(n, it == r.end() ? uint64_t{0} : it->second);
    out.total += n;
  }
  for (const auto& [g, n] : r) out.reference_total += n;
}

}  // namespace

double bleu2_char(std::span<const std::u32string> candidates, std::span<const std::u32string> references) {
  if (candidates.size() != references.size()) throw Error("bleu: candidate and reference counts differ");
  NgramTally uni;
  NgramTally bi;
  uint64_t cand_len = 0;
  uint64_t ref_len = 0;
  for (size_t i = 0; i < candidates.size(); ++i) {
    tally<1>(candidates[i], references[i], uni);
    tally<2>(candidates[i], references[i], bi);
    cand_len += candidates[i].size();
    ref_len += references[i].size();
  }
  if (cand_len == 0) return 0.0;
  const double p1 = static_cast<double>(uni.matched) / static_cast<double>(uni.total);
  double p2 = 0.0;
  if (bi.total > 0) {
    p2 = static_cast<double>(bi.matched) / static_cast<double>(bi.total);
  } else if (bi.reference_total == 0) {
    p2 = 1.0;
  }
  if (p1 == 0.0 || p2 == 0.0) return 0.0;
  const double bp = cand_len > ref_len ? 1.0
                                       : std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(cand_len));
  return bp * std::sqrt(p1 * p2);
}

std::string MetricsReport::to_key_value() const {
  std::ostringstream out;
  out.precision(10);
  out << "reply_count=" << reply_count << "\n";
  out << "avg_length=" << avg_length << "\n";
  out << "entropy=" << entropy << "\n";
  if (keyword_entropy) out << "keyword_entropy=" << *keyword_entropy << "\n";
  if (remaining_entropy) out << "remaining_entropy=" << *remaining_entropy << "\n";
  if (bleu2) out << "bleu2=" << *bleu2 << "\n";
  if (!config_hash.empty()) out << "config_hash=" << config_hash << "\n";
  return out.str();
}

std::string MetricsReport::to_table() const {
  std::string out;
  char line[128];
  auto row = [&](const char* name, double v) {
    std::snprintf(line, sizeof line, "%-18s %12.4f\n", name, v);
    out += line;
  };
  std::snprintf(line, sizeof line, "%-18s %12zu\n", "replies", reply_count);
  out += line;
  row("avg length (chars)", avg_length);
  row("entropy (bits)", entropy);
  if (keyword_entropy) row("keyword entropy", *keyword_entropy);
  if (remaining_entropy) row("remaining entropy", *remaining_entropy);
  if (bleu2) row("char BLEU-2", *bleu2);
  return out;
}

}  // namespace seq2bf
