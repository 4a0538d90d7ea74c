#include "seq2bf/app/engine.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "seq2bf/error.hpp"
#include "seq2bf/utf8.hpp"

namespace seq2bf::app {

namespace fs = std::filesystem;

Metadata read_manifest(const fs::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw IoError("cannot read bundle manifest: " + manifest.string());
  std::stringstream text;
  text << in.rdbuf();
  return parse_metadata(text.str());
}

void upsert_manifest(const fs::path& manifest, const std::string& key, const std::string& value) {
  Metadata entries;
  if (fs::exists(manifest)) entries = read_manifest(manifest);
  entries[key] = value;
  std::ofstream out(manifest);
  if (!out) throw IoError("cannot write bundle manifest: " + manifest.string());
  out << format_metadata(entries);
}

Bundle load_bundle(const fs::path& manifest) {
  const auto entries = read_manifest(manifest);
  const fs::path base = manifest.parent_path();
  auto path_of = [&](const std::string& key) -> std::optional<fs::path> {
    auto it = entries.find(key);
    if (it == entries.end() || it->second.empty()) return std::nullopt;
    fs::path p(it->second);
    return p.is_absolute() ? p : base / p;
  };
  auto required = [&](const std::string& key) {
    auto p = path_of(key);
    if (!p) throw ConfigError("bundle manifest lacks '" + key + "'");
    return *p;
  };

  Bundle b;
  b.model.vocab = Vocab::load(required("vocab"));
  const uint64_t hash = b.model.vocab.hash();
  auto load_component = [&](const fs::path& path, const std::string& component) {
    auto loaded = load_model(path, hash);
    const auto it = loaded.metadata.find("component");
    if (it == loaded.metadata.end() || it->second != component) {
      throw FormatError(path.string() + ": expected a " + component + " checkpoint");
    }
    if (loaded.model.dims().vocab != b.model.vocab.size()) throw FormatError(path.string() + ": vocab size mismatch");
    return std::move(loaded.model);
  };
  b.model.backward = load_component(required("backward"), "backward");
  b.model.forward = load_component(required("forward"), "forward");
  if (auto p = path_of("baseline")) b.baseline = load_component(*p, "baseline");

  b.stats = CooccurrenceStats::load(required("stats"));
  if (auto p = path_of("lexicon")) {
    auto terms = read_lexicon_terms(*p);
    std::sort(terms.begin(), terms.end());
    terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
    b.lexicon.terms = std::move(terms);
  } else {
    for (const auto& [term, n] : b.stats.reply_count) b.lexicon.terms.push_back(term);
  }
  for (const auto& t : b.lexicon.terms) {
    if (!b.stats.reply_count.contains(t)) throw FormatError("lexicon term '" + t + "' missing from the PMI stats");
  }
  return b;
}

Mode parse_mode(std::string_view name) {
  if (name == "seq2seq") return Mode::kSeq2Seq;
  if (name == "seq2bf") return Mode::kSeq2BF;
  if (name == "seq2bf-nokw") return Mode::kSeq2BFNoKeyword;
  throw ConfigError("unknown mode '" + std::string(name) + "' (expected seq2seq, seq2bf or seq2bf-nokw)");
}

std::string mode_name(Mode mode) {
  switch (mode) {
    case Mode::kSeq2Seq: return "seq2seq";
    case Mode::kSeq2BF: return "seq2bf";
    case Mode::kSeq2BFNoKeyword: return "seq2bf-nokw";
  }
  return "seq2bf";
}

ReplyResult ChatEngine::respond(std::string_view query, Mode mode) const {
  const auto words = utf8::split_words(query);
  if (mode == Mode::kSeq2Seq) {
    const auto ids = encode_chars(words, bundle_.model.vocab);
    const auto hyp = decode(bundle_.seq2seq(), ids, config_.decode);
    ReplyResult r;
    r.reply_chars = bundle_.model.vocab.decode(hyp.tokens);
    r.forward_logprob = hyp.logprob;
    return r;
  }
  ReplyConfig cfg = config_;
  cfg.use_keyword = mode == Mode::kSeq2BF;
  return reply(bundle_.model, bundle_.stats, bundle_.lexicon, words, cfg);
}

}  // namespace seq2bf::app
