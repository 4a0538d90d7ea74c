#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "seq2bf/checkpoint.hpp"
#include "seq2bf/seq2bf.hpp"

namespace seq2bf::app {

/// Loaded artifacts needed for inference.
struct Bundle {
  Seq2BF model;
  /// Plain seq2seq model; when the manifest names none the forward
  /// generator, trained on the same left-to-right objective, stands in.
  std::optional<EncoderDecoder> baseline;
  CooccurrenceStats stats;
  NounLexicon lexicon;

  const EncoderDecoder& seq2seq() const { return baseline ? *baseline : model.forward; }
};

/// Manifest: `key=value` lines naming vocab, stats, backward, forward and
/// optionally lexicon and baseline. Relative paths resolve against the
/// manifest's directory. Every checkpoint must carry the vocab's hash.
Bundle load_bundle(const std::filesystem::path& manifest);

/// Sets one manifest entry, creating the file when needed.
void upsert_manifest(const std::filesystem::path& manifest, const std::string& key, const std::string& value);

Metadata read_manifest(const std::filesystem::path& manifest);

enum class Mode { kSeq2Seq, kSeq2BF, kSeq2BFNoKeyword };

/// "seq2seq", "seq2bf" or "seq2bf-nokw"; throws ConfigError otherwise.
Mode parse_mode(std::string_view name);
std::string mode_name(Mode mode);

/// The single inference path behind `generate`, `chat` and `serve`.
/// Immutable after construction, so concurrent calls are safe.
class ChatEngine {
 public:
  ChatEngine(const Bundle& bundle, ReplyConfig config) : bundle_(bundle), config_(std::move(config)) {}

  /// Query text is space-separated words; characters outside the vocab map
  /// to UNK.
  ReplyResult respond(std::string_view query, Mode mode) const;

  const Bundle& bundle() const { return bundle_; }

 private:
  const Bundle& bundle_;
  ReplyConfig config_;
};

}  // namespace seq2bf::app
