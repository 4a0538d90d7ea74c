#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace seq2bf {

using TokenId = int32_t;
using IdSeq = std::vector<TokenId>;

/// A single-turn query/reply pair at both granularities: word tokens feed
/// the PMI statistics, characters feed generation.
struct DialoguePair {
  std::vector<std::string> query_words;
  std::vector<std::string> reply_words;
  std::u32string query_chars;
  std::u32string reply_chars;

  static DialoguePair from_words(std::vector<std::string> query, std::vector<std::string> reply);
};

/// Concatenated code points of a word sequence.
std::u32string join_chars(std::span<const std::string> words);

/// Parses one corpus line `query<TAB>reply`. Returns nullopt for a malformed
/// line (no TAB, or an empty side).
std::optional<DialoguePair> parse_pair_line(std::string_view line);

struct LoadedCorpus {
  std::vector<DialoguePair> pairs;
  size_t skipped = 0;
};

/// Reads a corpus file. Throws IoError if unreadable and CorpusFormatError
/// when more than half of the nonblank lines are malformed.
LoadedCorpus load_pairs(const std::filesystem::path& path);

/// Character vocabulary with fixed reserved ids.
class Vocab {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kBos = 1;
  static constexpr TokenId kEos = 2;
  static constexpr TokenId kUnk = 3;
  static constexpr TokenId kReserved = 4;

  Vocab();
  /// Builds from corpus characters listed in id order (ids 4, 5, ...).
  explicit Vocab(std::u32string chars);

  size_t size() const { return kReserved + chars_.size(); }
  TokenId id(char32_t c) const;
  bool contains(char32_t c) const { return index_.contains(c); }
  /// Character for a non-reserved id.
  char32_t character(TokenId id) const;
  std::u32string_view characters() const { return chars_; }

  /// Marks ids that have no character (reserved or out of range) in decoded text.
  static constexpr char32_t kReplacementChar = 0xFFFD;

  /// Inverse of encoding. Every id yields exactly one character, so decoded
  /// positions line up with id positions.
  std::u32string decode(std::span<const TokenId> ids) const;
  std::string decode_utf8(std::span<const TokenId> ids) const;

  /// FNV-1a over the serialized vocab file contents.
  uint64_t hash() const;
  std::string serialize() const;
  void save(const std::filesystem::path& path) const;
  static Vocab load(const std::filesystem::path& path);

  bool operator==(const Vocab& other) const { return chars_ == other.chars_; }

 private:
  std::u32string chars_;
  std::unordered_map<char32_t, TokenId> index_;
};

/// Keeps the cap-4 most frequent characters over both sides of every pair;
/// frequency ties go to the smaller code point. Throws ConfigError if cap < 5.
Vocab build_vocab(std::span<const DialoguePair> pairs, size_t cap);

IdSeq encode_chars(std::span<const std::string> words, const Vocab& vocab);
IdSeq encode_text(std::u32string_view chars, const Vocab& vocab);

/// Candidate keyword terms.
struct NounLexicon {
  std::vector<std::string> terms;  // sorted, unique
  size_t dropped_oov = 0;
  size_t dropped_rare = 0;

  bool contains(std::string_view term) const;
  bool empty() const { return terms.empty(); }
  size_t size() const { return terms.size(); }
};

/// Filters raw terms: drops any term with an out-of-vocabulary character and
/// any term seen fewer than min_count times among reply words.
NounLexicon make_lexicon(std::span<const std::string> raw_terms, const Vocab& vocab,
                         std::span<const DialoguePair> pairs, size_t min_count = 1);
std::vector<std::string> read_lexicon_terms(const std::filesystem::path& path);
void save_lexicon(const NounLexicon& lexicon, const std::filesystem::path& path);

/// A character-level training example. target excludes EOS.
struct Example {
  IdSeq query;
  IdSeq target;
};

Example make_example(const DialoguePair& pair, const Vocab& vocab);

/// Row-major padded batch. Each target row is terminated by EOS, so
/// target_lengths count the EOS.
struct Batch {
  size_t rows = 0;
  size_t query_width = 0;
  size_t target_width = 0;
  std::vector<TokenId> query_ids;
  std::vector<size_t> query_lengths;
  std::vector<TokenId> target_ids;
  std::vector<size_t> target_lengths;

  std::span<const TokenId> query(size_t row) const {
    return {query_ids.data() + row * query_width, query_lengths[row]};
  }
  std::span<const TokenId> target(size_t row) const {
    return {target_ids.data() + row * target_width, target_lengths[row]};
  }
};

Batch make_batch(std::span<const Example> examples);
std::vector<Batch> make_batches(std::span<const Example> examples, size_t batch_size, uint64_t shuffle_seed);
std::vector<Batch> make_batches(std::span<const DialoguePair> pairs, const Vocab& vocab, size_t batch_size,
                                uint64_t shuffle_seed);

}  // namespace seq2bf
