#include "seq2bf/pmi.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "seq2bf/binary_io.hpp"
#include "seq2bf/error.hpp"

namespace seq2bf {

namespace {

template <class Map>
uint64_t lookup(const Map& m, const typename Map::key_type& key) {
  auto it = m.find(key);
  return it == m.end() ? 0 : it->second;
}

}  // namespace

uint64_t CooccurrenceStats::query(std::string_view word) const {
  auto it = query_count.find(word);
  return it == query_count.end() ? 0 : it->second;
}

uint64_t CooccurrenceStats::reply(std::string_view term) const {
  auto it = reply_count.find(term);
  return it == reply_count.end() ? 0 : it->second;
}

uint64_t CooccurrenceStats::joint(const std::string& word, const std::string& term) const {
  return lookup(joint_count, {word, term});
}

std::vector<std::string> distinct_words(std::span<const std::string> words) {
  std::vector<std::string> out;
  std::set<std::string_view> seen;
  for (const auto& w : words) {
    if (seen.insert(w).second) out.push_back(w);
  }
  return out;
}

CooccurrenceStats empty_stats(const NounLexicon& lexicon, double smoothing_alpha) {
  if (!(smoothing_alpha >= 0.0)) throw ConfigError("smoothing alpha must be nonnegative");
  CooccurrenceStats stats;
  stats.smoothing_alpha = smoothing_alpha;
  for (const auto& t : lexicon.terms) stats.reply_count.emplace(t, 0);
  return stats;
}

void accumulate(CooccurrenceStats& stats, const DialoguePair& pair) {
  ++stats.pair_total;
  const auto query_words = distinct_words(pair.query_words);
  std::vector<std::string> terms;
  for (const auto& w : distinct_words(pair.reply_words)) {
    auto it = stats.reply_count.find(w);
    if (it == stats.reply_count.end()) continue;
    ++it->second;
    terms.push_back(w);
  }
  for (const auto& q : query_words) {
    ++stats.query_count[q];
    for (const auto& t : terms) ++stats.joint_count[{q, t}];
  }
}

CooccurrenceStats accumulate_stats(std::span<const DialoguePair> pairs, const NounLexicon& lexicon,
                                   double smoothing_alpha) {
  auto stats = empty_stats(lexicon, smoothing_alpha);
  for (const auto& p : pairs) accumulate(stats, p);
  return stats;
}

CooccurrenceStats merge_stats(const CooccurrenceStats& a, const CooccurrenceStats& b) {
  if (a.smoothing_alpha != b.smoothing_alpha) throw ConfigError("cannot merge stats with different smoothing");
  if (a.reply_count.size() != b.reply_count.size() ||
      !std::equal(a.reply_count.begin(), a.reply_count.end(), b.reply_count.begin(),
                  [](const auto& x, const auto& y) { return x.first == y.first; })) {
    throw ConfigError("cannot merge stats built over different lexicons");
  }
  CooccurrenceStats out = a;
  out.pair_total += b.pair_total;
  for (const auto& [k, v] : b.query_count) out.query_count[k] += v;
  for (const auto& [k, v] : b.reply_count) out.reply_count[k] += v;
  for (const auto& [k, v] : b.joint_count) out.joint_count[k] += v;
  return out;
}

double pmi_score(const CooccurrenceStats& stats, const std::string& query_word, const std::string& term) {
  const double alpha = stats.smoothing_alpha;
  // An empty table would zero the denominators; one pseudo-word keeps them positive.
  const double vq = static_cast<double>(std::max<size_t>(stats.query_vocab_size(), 1));
  const double joint = static_cast<double>(stats.joint(query_word, term));
  const double reply = static_cast<double>(stats.reply(term));
  const double query = static_cast<double>(stats.query(query_word));
  const double total = static_cast<double>(stats.pair_total);
  const double conditional = (joint + alpha) / (reply + alpha * vq);
  const double prior = (query + alpha) / (total + alpha * vq);
  return std::log(conditional / prior);
}

double query_pmi(const CooccurrenceStats& stats, std::span<const std::string> query_words, const std::string& term) {
  double sum = 0.0;
  for (const auto& w : distinct_words(query_words)) sum += pmi_score(stats, w, term);
  return sum;
}

std::vector<KeywordPrediction> predict_keyword(const CooccurrenceStats& stats, std::span<const std::string> query_words,
                                               const NounLexicon& lexicon, size_t k) {
  if (lexicon.empty()) throw ConfigError("keyword lexicon is empty");
  const auto words = distinct_words(query_words);
  std::vector<KeywordPrediction> scored;
  scored.reserve(lexicon.size());
  for (const auto& term : lexicon.terms) {
    KeywordPrediction p;
    p.term = term;
    for (const auto& w : words) {
      const double s = pmi_score(stats, w, term);
      p.per_word.emplace_back(w, s);
      p.score += s;
    }
    scored.push_back(std::move(p));
  }
  auto grid = [](double s) { return std::llround(s * 1e9); };
  auto better = [&](const KeywordPrediction& a, const KeywordPrediction& b) {
    if (grid(a.score) != grid(b.score)) return grid(a.score) > grid(b.score);
    const uint64_t ca = stats.reply(a.term);
    const uint64_t cb = stats.reply(b.term);
    if (ca != cb) return ca > cb;
    return a.term < b.term;
  };
  const size_t keep = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep), scored.end(), better);
  scored.resize(keep);
  return scored;
}

// ---------------------------------------------------------------------------
// Persistence: magic PMI1, alpha, pair_total, then query/reply/joint tables.

void CooccurrenceStats::write(std::ostream& out) const {
  out.write("PMI1", 4);
  binio::put_f64(out, smoothing_alpha);
  binio::put_u64(out, pair_total);
  binio::put_u64(out, query_count.size());
  for (const auto& [k, v] : query_count) {
    binio::put_string(out, k);
    binio::put_u64(out, v);
  }
  binio::put_u64(out, reply_count.size());
  for (const auto& [k, v] : reply_count) {
    binio::put_string(out, k);
    binio::put_u64(out, v);
  }
  binio::put_u64(out, joint_count.size());
  for (const auto& [k, v] : joint_count) {
    binio::put_string(out, k.first);
    binio::put_string(out, k.second);
    binio::put_u64(out, v);
  }
}

CooccurrenceStats CooccurrenceStats::read(std::istream& in) {
  binio::expect_magic(in, "PMI1");
  CooccurrenceStats s;
  s.smoothing_alpha = binio::get_f64(in);
  s.pair_total = binio::get_u64(in);
  for (uint64_t n = binio::get_u64(in); n > 0; --n) {
    auto key = binio::get_string(in);
    s.query_count[std::move(key)] = binio::get_u64(in);
  }
  for (uint64_t n = binio::get_u64(in); n > 0; --n) {
    auto key = binio::get_string(in);
    s.reply_count[std::move(key)] = binio::get_u64(in);
  }
  for (uint64_t n = binio::get_u64(in); n > 0; --n) {
    auto q = binio::get_string(in);
    auto r = binio::get_string(in);
    s.joint_count[{std::move(q), std::move(r)}] = binio::get_u64(in);
  }
  return s;
}

void CooccurrenceStats::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write stats file: " + path.string());
  write(out);
}

CooccurrenceStats CooccurrenceStats::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read stats file: " + path.string());
  return read(in);
}

}  // namespace seq2bf
