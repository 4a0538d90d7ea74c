#include "seq2bf/app/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>

#include "seq2bf/app/config.hpp"
#include "seq2bf/app/engine.hpp"
#include "seq2bf/app/server.hpp"
#include "seq2bf/error.hpp"
#include "seq2bf/eval.hpp"
#include "seq2bf/utf8.hpp"

namespace seq2bf::app {

namespace fs = std::filesystem;

namespace {

void write_sidecar(const fs::path& artifact, const RunConfig& cfg) {
  std::ofstream out(artifact.string() + ".config");
  if (!out) throw IoError("cannot write " + artifact.string() + ".config");
  out << cfg.to_text() << "config_hash=" << cfg.hash() << '\n';
}

std::vector<DialoguePair> load_corpora(const RunConfig& cfg, std::ostream& out) {
  if (cfg.corpus.empty()) throw ConfigError("--corpus is required");
  std::vector<DialoguePair> pairs;
  for (const auto& path : cfg.corpus) {
    auto loaded = load_pairs(path);
    out << "corpus " << path << ": " << loaded.pairs.size() << " pairs, " << loaded.skipped << " malformed lines skipped\n";
    pairs.insert(pairs.end(), loaded.pairs.begin(), loaded.pairs.end());
  }
  return pairs;
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw ConfigError(std::string(flag) + " is required");
}

std::string relative_to_manifest(const RunConfig& cfg, const std::string& path) {
  const fs::path base = fs::absolute(cfg.bundle).parent_path();
  return fs::relative(fs::absolute(path), base).string();
}

// ---------------------------------------------------------------------------

int cmd_build_vocab(const RunConfig& cfg, std::ostream& out) {
  require(cfg.vocab, "--vocab");
  const auto pairs = load_corpora(cfg, out);
  const auto vocab = build_vocab(pairs, cfg.vocab_cap);
  vocab.save(cfg.vocab);
  write_sidecar(cfg.vocab, cfg);
  if (!cfg.bundle.empty()) upsert_manifest(cfg.bundle, "vocab", relative_to_manifest(cfg, cfg.vocab));
  out << "vocab " << cfg.vocab << ": " << vocab.size() << " ids (" << vocab.characters().size() << " characters)\n";
  return 0;
}

int cmd_pmi_train(const RunConfig& cfg, std::ostream& out) {
  require(cfg.vocab, "--vocab");
  require(cfg.lexicon, "--lexicon");
  require(cfg.stats, "--stats");
  const auto vocab = Vocab::load(cfg.vocab);
  const auto raw = read_lexicon_terms(cfg.lexicon);

  std::vector<std::vector<DialoguePair>> shards;
  std::vector<DialoguePair> all;
  for (const auto& path : cfg.corpus) {
    auto loaded = load_pairs(path);
    out << "shard " << path << ": " << loaded.pairs.size() << " pairs, " << loaded.skipped << " malformed lines skipped\n";
    all.insert(all.end(), loaded.pairs.begin(), loaded.pairs.end());
    shards.push_back(std::move(loaded.pairs));
  }
  if (shards.empty()) throw ConfigError("--corpus is required");

  const auto lexicon = make_lexicon(raw, vocab, all, cfg.lexicon_min_count);
  out << "lexicon: " << lexicon.size() << " terms kept, " << lexicon.dropped_oov << " dropped (characters outside vocab), "
      << lexicon.dropped_rare << " dropped (below min count)\n";
  if (lexicon.size() == 0) throw ConfigError("noun lexicon is empty after filtering");

  auto stats = empty_stats(lexicon, cfg.pmi_alpha);
  for (const auto& shard : shards) stats = merge_stats(stats, accumulate_stats(shard, lexicon, cfg.pmi_alpha));
  stats.save(cfg.stats);
  write_sidecar(cfg.stats, cfg);
  const std::string lexicon_path = cfg.lexicon_out.empty() ? cfg.stats + ".lexicon" : cfg.lexicon_out;
  save_lexicon(lexicon, lexicon_path);
  if (!cfg.bundle.empty()) {
    upsert_manifest(cfg.bundle, "stats", relative_to_manifest(cfg, cfg.stats));
    upsert_manifest(cfg.bundle, "lexicon", relative_to_manifest(cfg, lexicon_path));
  }
  out << "stats " << cfg.stats << ": " << stats.pair_total << " pairs, " << stats.query_vocab_size() << " query words, "
      << stats.joint_count.size() << " joint entries\n";
  return 0;
}

int cmd_train(const RunConfig& cfg, const std::string& component, std::ostream& out) {
  require(cfg.vocab, "--vocab");
  require(cfg.checkpoint, "--out");
  const auto vocab = Vocab::load(cfg.vocab);
  const auto pairs = load_corpora(cfg, out);
  std::vector<DialoguePair> valid_pairs;
  if (!cfg.valid.empty()) valid_pairs = load_pairs(cfg.valid).pairs;

  const bool backward = component == "backward";
  ExampleSource source;
  std::vector<Example> valid;
  if (backward) {
    source = [&](size_t epoch) { return sample_backward_examples(pairs, vocab, cfg.seed * 1000003 + epoch); };
    valid = sample_backward_examples(valid_pairs, vocab, cfg.seed);
  } else {
    std::vector<Example> fixed;
    for (const auto& p : pairs) fixed.push_back(make_example(p, vocab));
    source = [fixed = std::move(fixed)](size_t) { return fixed; };
    for (const auto& p : valid_pairs) valid.push_back(make_example(p, vocab));
  }

  EncoderDecoder model({vocab.size(), cfg.embed_dim, cfg.hidden_dim});
  model.init_uniform(cfg.seed, static_cast<float>(cfg.init_range));

  std::ofstream log;
  if (!cfg.epoch_log.empty()) {
    log.open(cfg.epoch_log);
    if (!log) throw IoError("cannot write epoch log " + cfg.epoch_log);
    log << "epoch\ttrain_xent\tvalid_bleu2\n";
  }
  TrainConfig tc = cfg.train_config();
  tc.valid_forced_tokens = backward ? 1 : 0;
  tc.on_epoch = [&](const EpochLog& e) {
    out << "epoch " << e.epoch << "\ttrain_xent=" << e.train_xent << "\tvalid_bleu2=" << e.valid_bleu2 << std::endl;
    if (log) log << e.epoch << '\t' << e.train_xent << '\t' << e.valid_bleu2 << std::endl;
  };
  const auto result = train(model, source, valid, tc);
  out << "best epoch " << result.best_epoch << " (valid_bleu2=" << result.best_bleu2 << ")\n";

  save_model(cfg.checkpoint, model, component, vocab.hash(),
             {{"config_hash", cfg.hash()}, {"best_epoch", std::to_string(result.best_epoch)}, {"seed", std::to_string(cfg.seed)}});
  write_sidecar(cfg.checkpoint, cfg);
  if (!cfg.bundle.empty()) upsert_manifest(cfg.bundle, component, relative_to_manifest(cfg, cfg.checkpoint));
  out << "checkpoint " << cfg.checkpoint << '\n';
  return 0;
}

ReplyConfig reply_config(const RunConfig& cfg) {
  ReplyConfig rc;
  rc.decode = cfg.decode_config();
  rc.candidates = cfg.candidates_k;
  return rc;
}

std::vector<std::string> read_queries(const std::string& path, std::istream& in) {
  std::ifstream file;
  std::istream* src = &in;
  if (!path.empty() && path != "-") {
    file.open(path);
    if (!file) throw IoError("cannot read " + path);
    src = &file;
  }
  std::vector<std::string> queries;
  std::string line;
  while (std::getline(*src, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto tab = line.find('\t');
    if (tab != std::string::npos) line.resize(tab);
    if (!line.empty()) queries.push_back(line);
  }
  return queries;
}

int cmd_generate(const RunConfig& cfg, const std::string& mode_text, std::istream& in, std::ostream& out) {
  require(cfg.bundle, "--bundle");
  const Mode mode = parse_mode(mode_text);
  const auto bundle = load_bundle(cfg.bundle);
  const ChatEngine engine(bundle, reply_config(cfg));

  std::ofstream file;
  std::ostream* dst = &out;
  if (!cfg.output.empty()) {
    file.open(cfg.output);
    if (!file) throw IoError("cannot write " + cfg.output);
    dst = &file;
  }
  *dst << "query\treply\tkeyword\tkeyword_start\tpmi_score\n";
  size_t degraded = 0;
  for (const auto& q : read_queries(cfg.input, in)) {
    const auto r = engine.respond(q, mode);
    degraded += r.no_keyword ? 1 : 0;
    *dst << q << '\t' << r.reply_utf8() << '\t' << r.keyword.value_or("") << '\t';
    if (r.keyword) *dst << r.keyword_start;
    *dst << '\t';
    if (r.pmi_score) *dst << *r.pmi_score;
    *dst << '\n';
  }
  if (degraded > 0) out << degraded << " replies fell back to plain decoding (no usable keyword)\n";
  return 0;
}

struct EvalRow {
  std::u32string reply;
  std::optional<std::string> keyword;
  size_t keyword_start = 0;
};

// Plain lines, corpus pairs (reply in column 2) or `generate` output.
std::vector<EvalRow> read_eval_rows(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  std::vector<EvalRow> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (first && line.rfind("query\treply", 0) == 0) {
      first = false;
      continue;
    }
    first = false;
    if (line.empty()) continue;
    std::vector<std::string> cols;
    size_t pos = 0;
    while (true) {
      const auto tab = line.find('\t', pos);
      cols.push_back(line.substr(pos, tab == std::string::npos ? std::string::npos : tab - pos));
      if (tab == std::string::npos) break;
      pos = tab + 1;
    }
    EvalRow row;
    row.reply = join_chars(utf8::split_words(cols.size() > 1 ? cols[1] : cols[0]));
    if (cols.size() > 3 && !cols[2].empty() && !cols[3].empty()) {
      row.keyword = cols[2];
      row.keyword_start = std::stoul(cols[3]);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

int cmd_eval(const RunConfig& cfg, std::ostream& out) {
  require(cfg.candidates, "--candidates");
  const auto train_pairs = load_corpora(cfg, out);
  const Vocab vocab = cfg.vocab.empty() ? build_vocab(train_pairs, cfg.vocab_cap) : Vocab::load(cfg.vocab);
  std::vector<std::u32string> train_replies;
  for (const auto& p : train_pairs) train_replies.push_back(p.reply_chars);
  const auto unigram = UnigramModel::from_replies(train_replies, vocab);

  const auto rows = read_eval_rows(cfg.candidates);
  if (rows.empty()) throw ConfigError("no candidate replies in " + cfg.candidates);
  std::vector<std::u32string> replies;
  std::vector<ReplyResult> keyword_rows;
  for (const auto& r : rows) {
    replies.push_back(r.reply);
    if (r.keyword) {
      ReplyResult rr;
      rr.reply_chars = r.reply;
      rr.keyword = r.keyword;
      rr.keyword_start = r.keyword_start;
      keyword_rows.push_back(std::move(rr));
    }
  }

  MetricsReport report;
  report.reply_count = replies.size();
  report.avg_length = avg_length(replies);
  report.entropy = entropy(replies, unigram);
  if (!keyword_rows.empty()) {
    const auto d = decomposed_entropy(keyword_rows, unigram);
    if (d.keyword_chars > 0) report.keyword_entropy = d.keyword_bits;
    if (d.remaining_chars > 0) report.remaining_entropy = d.remaining_bits;
  }
  if (!cfg.references.empty()) {
    std::vector<std::u32string> refs;
    for (const auto& r : read_eval_rows(cfg.references)) refs.push_back(r.reply);
    report.bleu2 = bleu2_char(replies, refs);
  }
  report.config_hash = cfg.hash();
  out << report.to_table();
  if (!cfg.report.empty()) {
    std::ofstream file(cfg.report);
    if (!file) throw IoError("cannot write " + cfg.report);
    file << report.to_key_value();
  }
  return 0;
}

void print_reply(std::ostream& out, const ReplyResult& r) {
  out << r.reply_utf8();
  if (r.keyword) out << "    [keyword " << *r.keyword << " @" << r.keyword_start << "]";
  if (r.no_keyword) out << "    [no usable keyword]";
  out << '\n';
  if (!r.candidates.empty()) {
    out << "  candidates:";
    for (const auto& c : r.candidates) out << ' ' << c.term << '(' << c.score << ')';
    out << '\n';
  }
}

int cmd_chat(const RunConfig& cfg, const std::string& mode_text, std::istream& in, std::ostream& out) {
  require(cfg.bundle, "--bundle");
  Mode mode = parse_mode(mode_text);
  const auto bundle = load_bundle(cfg.bundle);
  const ChatEngine engine(bundle, reply_config(cfg));
  out << "mode " << mode_name(mode) << "; ':mode <name>' switches, ':quit' exits\n";
  std::string line;
  while (out << "> " << std::flush, std::getline(in, line)) {
    if (line == ":quit" || line == ":q") break;
    if (line.rfind(":mode ", 0) == 0) {
      try {
        mode = parse_mode(line.substr(6));
        out << "mode " << mode_name(mode) << '\n';
      } catch (const ConfigError& e) {
        out << e.what() << '\n';
      }
      continue;
    }
    if (line.empty()) continue;
    if (utf8::decode(line).size() > kMaxQueryChars) {
      out << "query longer than " << kMaxQueryChars << " characters\n";
      continue;
    }
    print_reply(out, engine.respond(line, mode));
  }
  out << '\n';
  return 0;
}

int cmd_serve(const RunConfig& cfg, std::ostream& out) {
  require(cfg.bundle, "--bundle");
  const auto bundle = load_bundle(cfg.bundle);
  const ChatEngine engine(bundle, reply_config(cfg));
  serve(engine, cfg.host, cfg.port, out);
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  std::string component;
  std::string mode = "seq2bf";

  CLI::App app{"Keyword-constrained reply generation with backward/forward decoders", "seq2bf"};
  app.set_config("--config", "", "Config file (key=value lines; [subcommand] sections)");
  app.require_subcommand(1);
  app.fallthrough();

  app.add_option("--seed", cfg.seed, "Random seed")->envname("SEQ2BF_SEED");
  app.add_flag("--paper-defaults", cfg.published_defaults, "Pin 500/500 dims and the published optimizer constants");
  // Options whose values --paper-defaults pins unless given explicitly.
  std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&, const RunConfig&)>>> pinned;
#define SEQ2BF_PINNED(flag, field, help) \
  pinned.emplace_back(app.add_option(flag, cfg.field, help), [](RunConfig& to, const RunConfig& from) { to.field = from.field; })
  SEQ2BF_PINNED("--vocab-cap", vocab_cap, "Character vocab size including 4 reserved ids");
  SEQ2BF_PINNED("--embed-dim", embed_dim, "Embedding size");
  SEQ2BF_PINNED("--hidden-dim", hidden_dim, "GRU state size");
  SEQ2BF_PINNED("--lr", learning_rate, "rmsprop learning rate");
  SEQ2BF_PINNED("--decay", decay, "rmsprop decay");
  SEQ2BF_PINNED("--epsilon", epsilon, "rmsprop epsilon");
  SEQ2BF_PINNED("--embed-lr", embedding_learning_rate, "Embedding SGD rate");
  SEQ2BF_PINNED("--init-range", init_range, "Uniform init half-width");
  SEQ2BF_PINNED("--batch-size", batch_size, "Minibatch size");
#undef SEQ2BF_PINNED
  app.add_option("--clip-norm", cfg.clip_norm, "Global gradient-norm clip (0 disables)");
  app.add_option("--epochs", cfg.epochs, "Maximum epochs");
  app.add_option("--patience", cfg.patience, "Epochs without validation improvement before stopping");
  app.add_option("--decode", cfg.decode_mode, "greedy or beam")->check(CLI::IsMember({"greedy", "beam"}));
  app.add_option("--beam-width", cfg.beam_width, "Beam width");
  app.add_option("--max-len", cfg.max_len, "Free tokens generated after any forced prefix");
  app.add_option("--candidates", cfg.candidates_k, "Keyword candidates reported per reply");

  auto* vocab_cmd = app.add_subcommand("build-vocab", "Build the character vocab from corpora");
  vocab_cmd->add_option("--corpus", cfg.corpus, "query<TAB>reply corpus (repeatable)")->required();
  vocab_cmd->add_option("--vocab", cfg.vocab, "Output vocab file")->required();
  vocab_cmd->add_option("--bundle", cfg.bundle, "Bundle manifest to update");

  auto* pmi_cmd = app.add_subcommand("pmi-train", "Count co-occurrence statistics for keyword prediction");
  pmi_cmd->add_option("--corpus", cfg.corpus, "Corpus shard (repeatable; shards are merged)")->required();
  pmi_cmd->add_option("--lexicon", cfg.lexicon, "Noun lexicon, one term per line")->required();
  pmi_cmd->add_option("--vocab", cfg.vocab, "Vocab file")->required();
  pmi_cmd->add_option("--stats", cfg.stats, "Output stats file")->required();
  pmi_cmd->add_option("--lexicon-out", cfg.lexicon_out, "Filtered lexicon output (default <stats>.lexicon)");
  pmi_cmd->add_option("--alpha", cfg.pmi_alpha, "Add-alpha smoothing");
  pmi_cmd->add_option("--min-count", cfg.lexicon_min_count, "Minimum reply count for a lexicon term");
  pmi_cmd->add_option("--bundle", cfg.bundle, "Bundle manifest to update");

  auto* train_cmd = app.add_subcommand("train", "Train one generator");
  train_cmd->add_option("--component", component, "baseline, backward or forward")
      ->required()
      ->check(CLI::IsMember({"baseline", "backward", "forward"}));
  train_cmd->add_option("--corpus", cfg.corpus, "Training corpus (repeatable)")->required();
  train_cmd->add_option("--valid", cfg.valid, "Validation corpus for early stopping");
  train_cmd->add_option("--vocab", cfg.vocab, "Vocab file")->required();
  train_cmd->add_option("--out", cfg.checkpoint, "Output checkpoint")->required();
  train_cmd->add_option("--log", cfg.epoch_log, "Per-epoch TSV log");
  train_cmd->add_option("--bundle", cfg.bundle, "Bundle manifest to update");

  auto* gen_cmd = app.add_subcommand("generate", "Generate replies for queries");
  gen_cmd->add_option("--mode", mode, "seq2seq, seq2bf or seq2bf-nokw")
      ->check(CLI::IsMember({"seq2seq", "seq2bf", "seq2bf-nokw"}));
  gen_cmd->add_option("--bundle", cfg.bundle, "Bundle manifest")->required();
  gen_cmd->add_option("--input", cfg.input, "Queries, one per line (first TSV column); '-' for stdin");
  gen_cmd->add_option("--output", cfg.output, "Output TSV (default stdout)");

  auto* eval_cmd = app.add_subcommand("eval", "Length, entropy and char-BLEU-2 of generated replies");
  eval_cmd->add_option("--candidates", cfg.candidates, "Replies (plain lines, corpus or generate TSV)")->required();
  eval_cmd->add_option("--references", cfg.references, "References aligned with the candidates");
  eval_cmd->add_option("--corpus", cfg.corpus, "Training corpus for the unigram model")->required();
  eval_cmd->add_option("--vocab", cfg.vocab, "Vocab file (default: built from the corpus)");
  eval_cmd->add_option("--report", cfg.report, "key=value report file");

  auto* chat_cmd = app.add_subcommand("chat", "Interactive terminal chat");
  chat_cmd->add_option("--mode", mode, "Initial mode")->check(CLI::IsMember({"seq2seq", "seq2bf", "seq2bf-nokw"}));
  chat_cmd->add_option("--bundle", cfg.bundle, "Bundle manifest")->required();

  auto* serve_cmd = app.add_subcommand("serve", "HTTP inference service");
  serve_cmd->add_option("--bundle", cfg.bundle, "Bundle manifest")->required();
  serve_cmd->add_option("--host", cfg.host, "Bind address");
  serve_cmd->add_option("--port", cfg.port, "Port");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (cfg.published_defaults) {
      RunConfig defaults = cfg;
      defaults.apply_published_defaults();
      const RunConfig explicit_values = cfg;
      cfg = defaults;
      // Flags given explicitly still win over the pinned constants.
      for (const auto& [opt, copy] : pinned) {
        if (opt->count() > 0) copy(cfg, explicit_values);
      }
    }
    cfg.validate();
    out << "# resolved config (hash " << cfg.hash() << ")\n" << cfg.to_text() << std::flush;

    if (*vocab_cmd) return cmd_build_vocab(cfg, out);
    if (*pmi_cmd) return cmd_pmi_train(cfg, out);
    if (*train_cmd) return cmd_train(cfg, component, out);
    if (*gen_cmd) return cmd_generate(cfg, mode, in, out);
    if (*eval_cmd) return cmd_eval(cfg, out);
    if (*chat_cmd) return cmd_chat(cfg, mode, in, out);
    if (*serve_cmd) return cmd_serve(cfg, out);
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace seq2bf::app
