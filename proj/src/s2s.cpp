#include "seq2bf/s2s.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "seq2bf/error.hpp"
#include "seq2bf/eval.hpp"
#include "seq2bf/optim.hpp"

namespace seq2bf {

EncoderDecoder::EncoderDecoder(ModelDims dims)
    : embed(dims.vocab, dims.embed),
      enc(dims.embed, dims.hidden),
      dec(dims.embed, dims.hidden),
      proj_w({dims.vocab, dims.hidden}),
      proj_b({dims.vocab}),
      dims_(dims) {
  if (dims.vocab == 0 || dims.embed == 0 || dims.hidden == 0) throw ConfigError("model dimensions must be positive");
}

ParamList EncoderDecoder::params() {
  ParamList out{{"embed", &embed.weight}};
  auto dense = dense_params();
  out.insert(out.end(), dense.begin(), dense.end());
  return out;
}

ParamList EncoderDecoder::dense_params() {
  ParamList out;
  enc.append_params(out, "enc");
  dec.append_params(out, "dec");
  out.push_back({"proj.W", &proj_w});
  out.push_back({"proj.b", &proj_b});
  return out;
}

void EncoderDecoder::init_uniform(uint64_t seed, float range) { seq2bf::init_uniform(params(), seed, range); }

void EncoderDecoder::zero_grad() const {
  for (const auto& p : const_cast<EncoderDecoder*>(this)->params()) p.tensor->zero_grad();
}

void save_model(const std::filesystem::path& path, EncoderDecoder& model, const std::string& component,
                uint64_t vocab_hash, Metadata extra) {
  extra["component"] = component;
  extra["vocab_hash"] = std::to_string(vocab_hash);
  extra["vocab_size"] = std::to_string(model.dims().vocab);
  extra["embed_dim"] = std::to_string(model.dims().embed);
  extra["hidden_dim"] = std::to_string(model.dims().hidden);
  save_checkpoint(path, extra, model.params());
}

LoadedModel load_model(const std::filesystem::path& path, uint64_t expected_vocab_hash) {
  auto ck = load_checkpoint(path);
  auto field = [&](const char* key) -> size_t {
    auto it = ck.metadata.find(key);
    if (it == ck.metadata.end()) throw FormatError(path.string() + ": checkpoint metadata lacks " + key);
    return std::stoull(it->second);
  };
  if (expected_vocab_hash != 0 && field("vocab_hash") != expected_vocab_hash) {
    throw FormatError(path.string() + ": vocab hash does not match the loaded vocab");
  }
  LoadedModel out{EncoderDecoder({field("vocab_size"), field("embed_dim"), field("hidden_dim")}), ck.metadata};
  assign_params(ck, out.model.params());
  return out;
}

// ---------------------------------------------------------------------------
// Inference

namespace {

Tape::Var run_encoder(Tape& tape, const EncoderDecoder& model, std::span<const TokenId> query) {
  auto h = tape.zeros(model.dims().hidden);
  for (TokenId id : query) h = gru_step(tape, model.enc, tape.gather(model.embed, static_cast<size_t>(id)), h);
  return h;
}

std::vector<double> log_softmax(const std::vector<double>& logits) {
  const double max = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double v : logits) z += std::exp(v - max);
  const double log_z = std::log(z) + max;
  std::vector<double> out(logits.size());
  for (size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - log_z;
  return out;
}

TokenId argmax(const std::vector<double>& v) {
  size_t best = 0;
  for (size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return static_cast<TokenId>(best);
}

std::u32string as_u32(std::span<const TokenId> ids) {
  std::u32string s;
  s.reserve(ids.size());
  for (TokenId id : ids) s.push_back(static_cast<char32_t>(id));
  return s;
}

// Decoder cursor after BOS and the forced prefix.
struct Cursor {
  Hypothesis hyp;
  StepOutput next;
};

Cursor start_cursor(const EncoderDecoder& model, std::span<const TokenId> query, const IdSeq& prefix) {
  Cursor c;
  c.next = decode_step(model, Vocab::kBos, encode(model, query));
  for (TokenId t : prefix) {
    if (t < 0 || static_cast<size_t>(t) >= model.dims().vocab) throw EncodingError("forced token outside vocab");
    const double lp = c.next.log_probs[static_cast<size_t>(t)];
    c.hyp.tokens.push_back(t);
    c.hyp.step_logprobs.push_back(lp);
    c.hyp.logprob += lp;
    c.next = decode_step(model, t, c.next.state);
  }
  return c;
}

}  // namespace

State encode(const EncoderDecoder& model, std::span<const TokenId> query) {
  Tape tape(false);
  return tape.value(run_encoder(tape, model, query));
}

StepOutput decode_step(const EncoderDecoder& model, TokenId prev_token, const State& state) {
  Tape tape(false);
  auto h = gru_step(tape, model.dec, tape.gather(model.embed, static_cast<size_t>(prev_token)), tape.constant(state));
  auto logits = tape.add_bias(tape.matvec(model.proj_w, h), model.proj_b);
  return {log_softmax(tape.value(logits)), tape.value(h)};
}

Hypothesis decode_greedy(const EncoderDecoder& model, std::span<const TokenId> query, const DecodeConfig& cfg) {
  Cursor c = start_cursor(model, query, cfg.forced_prefix);
  for (size_t i = 0; i < cfg.max_len; ++i) {
    const TokenId t = argmax(c.next.log_probs);
    const double lp = c.next.log_probs[static_cast<size_t>(t)];
    c.hyp.logprob += lp;
    c.hyp.step_logprobs.push_back(lp);
    if (t == Vocab::kEos) {
      c.hyp.finished = true;
      break;
    }
    c.hyp.tokens.push_back(t);
    if (i + 1 < cfg.max_len) c.next = decode_step(model, t, c.next.state);
  }
  return c.hyp;
}

BeamResult decode_beam(const EncoderDecoder& model, std::span<const TokenId> query, const DecodeConfig& cfg) {
  if (cfg.beam_width == 0) throw ConfigError("beam width must be positive");
  struct Candidate {
    size_t parent;
    TokenId token;
    double logprob;
  };
  auto ranks_before = [](double lp_a, const IdSeq& a, double lp_b, const IdSeq& b) {
    if (lp_a != lp_b) return lp_a > lp_b;
    return a < b;
  };

  std::vector<Cursor> live;
  live.push_back(start_cursor(model, query, cfg.forced_prefix));
  std::vector<Hypothesis> retired;

  for (size_t step = 0; step < cfg.max_len && !live.empty(); ++step) {
    std::vector<Candidate> cands;
    for (size_t i = 0; i < live.size(); ++i) {
      const auto& lp = live[i].next.log_probs;
      for (size_t v = 0; v < lp.size(); ++v) cands.push_back({i, static_cast<TokenId>(v), live[i].hyp.logprob + lp[v]});
    }
    auto seq_of = [&](const Candidate& c) {
      IdSeq s = live[c.parent].hyp.tokens;
      s.push_back(c.token);
      return s;
    };
    const size_t keep = std::min(cfg.beam_width, cands.size());
    std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep), cands.end(),
                      [&](const Candidate& a, const Candidate& b) {
                        if (a.logprob != b.logprob) return a.logprob > b.logprob;
                        return seq_of(a) < seq_of(b);
                      });
    std::vector<Cursor> next_live;
    for (size_t k = 0; k < keep; ++k) {
      const auto& c = cands[k];
      Cursor child;
      child.hyp = live[c.parent].hyp;
      child.hyp.logprob = c.logprob;
      child.hyp.step_logprobs.push_back(live[c.parent].next.log_probs[static_cast<size_t>(c.token)]);
      if (c.token == Vocab::kEos) {
        child.hyp.finished = true;
        retired.push_back(std::move(child.hyp));
        continue;
      }
      child.hyp.tokens.push_back(c.token);
      if (step + 1 < cfg.max_len) child.next = decode_step(model, c.token, live[c.parent].next.state);
      next_live.push_back(std::move(child));
    }
    live = std::move(next_live);
  }

  BeamResult result;
  result.beam = std::move(retired);
  for (auto& c : live) result.beam.push_back(std::move(c.hyp));
  std::sort(result.beam.begin(), result.beam.end(), [&](const Hypothesis& a, const Hypothesis& b) {
    return ranks_before(a.logprob, a.tokens, b.logprob, b.tokens);
  });
  result.best = result.beam.front();
  return result;
}

Hypothesis decode(const EncoderDecoder& model, std::span<const TokenId> query, const DecodeConfig& cfg) {
  return cfg.mode == DecodeMode::kBeam ? decode_beam(model, query, cfg).best : decode_greedy(model, query, cfg);
}

std::vector<double> step_logprobs(const EncoderDecoder& model, std::span<const TokenId> query,
                                  std::span<const TokenId> reply, bool append_eos) {
  std::vector<double> out;
  auto step = decode_step(model, Vocab::kBos, encode(model, query));
  for (size_t i = 0; i < reply.size(); ++i) {
    const auto t = static_cast<size_t>(reply[i]);
    if (t >= step.log_probs.size()) throw EncodingError("reply token outside vocab");
    out.push_back(step.log_probs[t]);
    if (i + 1 < reply.size() || append_eos) step = decode_step(model, reply[i], step.state);
  }
  if (append_eos) out.push_back(step.log_probs[Vocab::kEos]);
  return out;
}

double sequence_logprob(const EncoderDecoder& model, std::span<const TokenId> query, std::span<const TokenId> reply) {
  double total = 0.0;
  for (double lp : step_logprobs(model, query, reply, true)) total += lp;
  return total;
}

Tape::Var sequence_loss(Tape& tape, const EncoderDecoder& model, std::span<const TokenId> query,
                        std::span<const TokenId> target) {
  auto h = run_encoder(tape, model, query);
  std::vector<Tape::Var> losses;
  TokenId prev = Vocab::kBos;
  for (size_t i = 0; i <= target.size(); ++i) {
    const TokenId gold = i < target.size() ? target[i] : Vocab::kEos;
    h = gru_step(tape, model.dec, tape.gather(model.embed, static_cast<size_t>(prev)), h);
    auto logits = tape.add_bias(tape.matvec(model.proj_w, h), model.proj_b);
    losses.push_back(tape.softmax_xent(logits, static_cast<size_t>(gold)));
    prev = gold;
  }
  return tape.sum(losses);
}

// ---------------------------------------------------------------------------
// Training

double validation_bleu2(const EncoderDecoder& model, std::span<const Example> valid, size_t forced_tokens,
                        size_t max_len) {
  std::vector<std::u32string> cands;
  std::vector<std::u32string> refs;
  for (const auto& ex : valid) {
    DecodeConfig cfg;
    cfg.max_len = max_len;
    cfg.forced_prefix.assign(ex.target.begin(),
                             ex.target.begin() + static_cast<std::ptrdiff_t>(std::min(forced_tokens, ex.target.size())));
    cands.push_back(as_u32(decode_greedy(model, ex.query, cfg).tokens));
    refs.push_back(as_u32(ex.target));
  }
  return bleu2_char(cands, refs);
}

TrainResult train(EncoderDecoder& model, const ExampleSource& examples, std::span<const Example> valid,
                  const TrainConfig& cfg) {
  if (cfg.epochs == 0) throw ConfigError("epochs must be positive");
  RmspropState rms{cfg.decay, cfg.epsilon, cfg.learning_rate, {}};
  const auto dense = model.dense_params();
  const auto all = model.params();

  TrainResult result;
  std::vector<std::vector<float>> best;
  double best_score = -std::numeric_limits<double>::infinity();
  size_t since_best = 0;

  for (size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto exs = examples(epoch);
    if (exs.empty()) throw ConfigError("training set is empty");
    const auto batches = make_batches(exs, cfg.batch_size, cfg.seed + epoch);
    double loss_sum = 0.0;
    size_t tokens = 0;
    for (size_t b = 0; b < batches.size(); ++b) {
      const auto& batch = batches[b];
      model.zero_grad();
      double batch_loss = 0.0;
      for (size_t r = 0; r < batch.rows; ++r) {
        Tape tape;
        const auto target = batch.target(r);
        // Batch rows carry the EOS terminator; sequence_loss appends its own.
        auto loss = sequence_loss(tape, model, batch.query(r), target.first(target.size() - 1));
        std::array<Tape::Var, 1> parts{loss};
        tape.backward(tape.sum(parts, 1.0 / static_cast<double>(batch.rows)));
        batch_loss += tape.scalar(loss);
        tokens += target.size();
      }
      if (!std::isfinite(batch_loss)) {
        throw NumericalError("non-finite training loss in epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(b));
      }
      loss_sum += batch_loss;
      if (cfg.clip_norm > 0.0) clip_global_norm(all, cfg.clip_norm);
      rmsprop_step(rms, dense);
      embedding_sgd_step(model.embed, cfg.embedding_learning_rate);
    }

    EpochLog entry;
    entry.epoch = epoch;
    entry.train_xent = loss_sum / static_cast<double>(std::max<size_t>(tokens, 1));
    double score;
    if (valid.empty()) {
      entry.valid_bleu2 = 0.0;
      score = -entry.train_xent;
    } else {
      entry.valid_bleu2 = validation_bleu2(model, valid, cfg.valid_forced_tokens, cfg.valid_max_len);
      score = entry.valid_bleu2;
    }
    result.log.push_back(entry);
    if (cfg.on_epoch) cfg.on_epoch(entry);

    if (score > best_score) {
      best_score = score;
      result.best_epoch = epoch;
      result.best_bleu2 = entry.valid_bleu2;
      best.clear();
      for (const auto& p : all) best.push_back(p.tensor->values);
      since_best = 0;
    } else {
      ++since_best;
    }
    if (since_best >= cfg.patience) break;
  }

  for (size_t i = 0; i < all.size(); ++i) all[i].tensor->values = best[i];
  return result;
}

}  // namespace seq2bf
