#include "seq2bf/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "seq2bf/error.hpp"
#include "seq2bf/random.hpp"
#include "seq2bf/utf8.hpp"

namespace seq2bf {

namespace {

constexpr std::string_view kReservedNames[] = {"<pad>", "<bos>", "<eos>", "<unk>"};

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace

std::u32string join_chars(std::span<const std::string> words) {
  std::u32string out;
  for (const auto& w : words) out += utf8::decode(w);
  return out;
}

DialoguePair DialoguePair::from_words(std::vector<std::string> query, std::vector<std::string> reply) {
  DialoguePair pair;
  pair.query_chars = join_chars(query);
  pair.reply_chars = join_chars(reply);
  pair.query_words = std::move(query);
  pair.reply_words = std::move(reply);
  return pair;
}

std::optional<DialoguePair> parse_pair_line(std::string_view line) {
  const size_t tab = line.find('\t');
  if (tab == std::string_view::npos) return std::nullopt;
  auto query = utf8::split_words(line.substr(0, tab));
  auto reply = utf8::split_words(line.substr(tab + 1));
  if (query.empty() || reply.empty()) return std::nullopt;
  return DialoguePair::from_words(std::move(query), std::move(reply));
}

LoadedCorpus load_pairs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read corpus file: " + path.string());
  LoadedCorpus corpus;
  size_t lines = 0;
  std::string line;
  while (std::getline(in, line)) {
    line = strip_cr(std::move(line));
    if (line.empty()) continue;
    ++lines;
    if (auto pair = parse_pair_line(line)) {
      corpus.pairs.push_back(std::move(*pair));
    } else {
      ++corpus.skipped;
    }
  }
  if (in.bad()) throw IoError("error while reading corpus file: " + path.string());
  if (lines > 0 && 2 * corpus.skipped > lines) {
    throw CorpusFormatError(path.string() + ": " + std::to_string(corpus.skipped) + " of " +
                            std::to_string(lines) + " lines are malformed");
  }
  return corpus;
}

// ---------------------------------------------------------------------------
// Vocab

Vocab::Vocab() = default;

Vocab::Vocab(std::u32string chars) : chars_(std::move(chars)) {
  for (size_t i = 0; i < chars_.size(); ++i) {
    auto [it, inserted] = index_.emplace(chars_[i], static_cast<TokenId>(kReserved + i));
    if (!inserted) throw FormatError("duplicate character in vocab");
  }
}

TokenId Vocab::id(char32_t c) const {
  auto it = index_.find(c);
  return it == index_.end() ? kUnk : it->second;
}

char32_t Vocab::character(TokenId id) const {
  if (id < kReserved || static_cast<size_t>(id) >= size()) {
    throw EncodingError("not a character id: " + std::to_string(id));
  }
  return chars_[static_cast<size_t>(id - kReserved)];
}

std::u32string Vocab::decode(std::span<const TokenId> ids) const {
  std::u32string out;
  out.reserve(ids.size());
  for (TokenId id : ids) {
    out.push_back(id >= kReserved && static_cast<size_t>(id) < size() ? chars_[id - kReserved] : kReplacementChar);
  }
  return out;
}

std::string Vocab::decode_utf8(std::span<const TokenId> ids) const { return utf8::encode(decode(ids)); }

std::string Vocab::serialize() const {
  std::string out;
  for (auto name : kReservedNames) {
    out += name;
    out += '\n';
  }
  for (char32_t c : chars_) {
    out += utf8::encode(c);
    out += '\n';
  }
  return out;
}

uint64_t Vocab::hash() const {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : serialize()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void Vocab::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write vocab file: " + path.string());
  out << serialize();
}

Vocab Vocab::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read vocab file: " + path.string());
  std::string line;
  for (auto name : kReservedNames) {
    if (!std::getline(in, line) || strip_cr(line) != name) {
      throw FormatError(path.string() + ": missing reserved header line " + std::string(name));
    }
  }
  std::u32string chars;
  while (std::getline(in, line)) {
    auto cps = utf8::decode(strip_cr(line));
    if (cps.size() != 1) throw FormatError(path.string() + ": vocab line is not a single character");
    chars.push_back(cps[0]);
  }
  return Vocab(std::move(chars));
}

Vocab build_vocab(std::span<const DialoguePair> pairs, size_t cap) {
  if (cap < 5) throw ConfigError("vocab cap must be at least 5, got " + std::to_string(cap));
  std::map<char32_t, uint64_t> freq;
  for (const auto& p : pairs) {
    for (char32_t c : p.query_chars) ++freq[c];
    for (char32_t c : p.reply_chars) ++freq[c];
  }
  std::vector<std::pair<char32_t, uint64_t>> ranked(freq.begin(), freq.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  const size_t keep = std::min(ranked.size(), cap - Vocab::kReserved);
  std::u32string chars;
  chars.reserve(keep);
  for (size_t i = 0; i < keep; ++i) chars.push_back(ranked[i].first);
  return Vocab(std::move(chars));
}

IdSeq encode_text(std::u32string_view chars, const Vocab& vocab) {
  IdSeq ids;
  ids.reserve(chars.size());
  for (char32_t c : chars) ids.push_back(vocab.id(c));
  return ids;
}

IdSeq encode_chars(std::span<const std::string> words, const Vocab& vocab) {
  return encode_text(join_chars(words), vocab);
}

// ---------------------------------------------------------------------------
// Lexicon

bool NounLexicon::contains(std::string_view term) const {
  return std::binary_search(terms.begin(), terms.end(), term);
}

NounLexicon make_lexicon(std::span<const std::string> raw_terms, const Vocab& vocab,
                         std::span<const DialoguePair> pairs, size_t min_count) {
  std::unordered_map<std::string, size_t> seen;
  for (const auto& p : pairs) {
    for (const auto& w : p.reply_words) ++seen[w];
  }
  NounLexicon lexicon;
  std::vector<std::string> terms(raw_terms.begin(), raw_terms.end());
  std::sort(terms.begin(), terms.end());
  terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
  for (auto& term : terms) {
    if (term.empty()) continue;
    const auto cps = utf8::decode(term);
    if (!std::all_of(cps.begin(), cps.end(), [&](char32_t c) { return vocab.contains(c); })) {
      ++lexicon.dropped_oov;
      continue;
    }
    auto it = seen.find(term);
    if ((it == seen.end() ? 0 : it->second) < min_count) {
      ++lexicon.dropped_rare;
      continue;
    }
    lexicon.terms.push_back(std::move(term));
  }
  return lexicon;
}

std::vector<std::string> read_lexicon_terms(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read lexicon file: " + path.string());
  std::vector<std::string> terms;
  std::string line;
  while (std::getline(in, line)) {
    line = strip_cr(std::move(line));
    if (!line.empty()) terms.push_back(line);
  }
  return terms;
}

void save_lexicon(const NounLexicon& lexicon, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write lexicon file: " + path.string());
  for (const auto& t : lexicon.terms) out << t << '\n';
}

// ---------------------------------------------------------------------------
// Batching

Example make_example(const DialoguePair& pair, const Vocab& vocab) {
  return {encode_text(pair.query_chars, vocab), encode_text(pair.reply_chars, vocab)};
}

Batch make_batch(std::span<const Example> examples) {
  Batch batch;
  batch.rows = examples.size();
  for (const auto& ex : examples) {
    batch.query_width = std::max(batch.query_width, ex.query.size());
    batch.target_width = std::max(batch.target_width, ex.target.size() + 1);
  }
  batch.query_ids.assign(batch.rows * batch.query_width, Vocab::kPad);
  batch.target_ids.assign(batch.rows * batch.target_width, Vocab::kPad);
  for (size_t r = 0; r < batch.rows; ++r) {
    const auto& ex = examples[r];
    std::copy(ex.query.begin(), ex.query.end(), batch.query_ids.begin() + r * batch.query_width);
    std::copy(ex.target.begin(), ex.target.end(), batch.target_ids.begin() + r * batch.target_width);
    batch.target_ids[r * batch.target_width + ex.target.size()] = Vocab::kEos;
    batch.query_lengths.push_back(ex.query.size());
    batch.target_lengths.push_back(ex.target.size() + 1);
  }
  return batch;
}

std::vector<Batch> make_batches(std::span<const Example> examples, size_t batch_size, uint64_t shuffle_seed) {
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  std::vector<size_t> order(examples.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(shuffle_seed);
  shuffle(std::span<size_t>(order), rng);

  std::vector<Batch> batches;
  std::vector<Example> chunk;
  for (size_t start = 0; start < order.size(); start += batch_size) {
    chunk.clear();
    for (size_t i = start; i < std::min(order.size(), start + batch_size); ++i) chunk.push_back(examples[order[i]]);
    batches.push_back(make_batch(chunk));
  }
  return batches;
}

std::vector<Batch> make_batches(std::span<const DialoguePair> pairs, const Vocab& vocab, size_t batch_size,
                                uint64_t shuffle_seed) {
  std::vector<Example> examples;
  examples.reserve(pairs.size());
  for (const auto& p : pairs) examples.push_back(make_example(p, vocab));
  return make_batches(examples, batch_size, shuffle_seed);
}

}  // namespace seq2bf
