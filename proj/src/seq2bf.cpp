#include "seq2bf/seq2bf.hpp"

#include <algorithm>
#include <set>

#include "seq2bf/error.hpp"
#include "seq2bf/utf8.hpp"

namespace seq2bf {

BackwardExample backward_example_at(const DialoguePair& pair, const Vocab& vocab, size_t k) {
  const size_t m = pair.reply_chars.size();
  if (k < 1 || k > m) throw Error("split index out of range");
  BackwardExample ex;
  ex.split = k;
  ex.query_ids = encode_text(pair.query_chars, vocab);
  const auto reply = encode_text(pair.reply_chars, vocab);
  ex.target_ids.assign(reply.rbegin() + static_cast<std::ptrdiff_t>(m - k), reply.rend());
  ex.target_ids.push_back(Vocab::kEos);
  return ex;
}

std::optional<BackwardExample> make_backward_example(const DialoguePair& pair, const Vocab& vocab, Rng& rng) {
  if (pair.reply_chars.empty()) return std::nullopt;
  const size_t k = 1 + uniform_index(rng, pair.reply_chars.size());
  return backward_example_at(pair, vocab, k);
}

std::vector<Example> sample_backward_examples(std::span<const DialoguePair> pairs, const Vocab& vocab, uint64_t seed) {
  Rng rng(seed);
  std::vector<Example> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    if (auto ex = make_backward_example(p, vocab, rng)) {
      ex->target_ids.pop_back();
      out.push_back({std::move(ex->query_ids), std::move(ex->target_ids)});
    }
  }
  return out;
}

bool shares_tensors(EncoderDecoder& a, EncoderDecoder& b) {
  std::set<const void*> storage;
  for (const auto& p : a.params()) {
    storage.insert(p.tensor);
    storage.insert(p.tensor->values.data());
  }
  for (const auto& p : b.params()) {
    if (storage.contains(p.tensor) || storage.contains(p.tensor->values.data())) return true;
  }
  return false;
}

namespace {

double free_logprob(const Hypothesis& hyp, size_t forced) {
  double total = 0.0;
  for (size_t i = forced; i < hyp.step_logprobs.size(); ++i) total += hyp.step_logprobs[i];
  return total;
}

}  // namespace

HalfResult generate_backward(const EncoderDecoder& backward, const Vocab& vocab, std::span<const TokenId> query_ids,
                             const std::optional<std::string>& keyword, const DecodeConfig& cfg) {
  DecodeConfig run = cfg;
  run.forced_prefix.clear();
  if (keyword) {
    const auto chars = utf8::decode(*keyword);
    if (chars.empty()) throw KeywordError("empty keyword");
    for (auto it = chars.rbegin(); it != chars.rend(); ++it) {
      if (!vocab.contains(*it)) throw KeywordError("keyword '" + *keyword + "' has a character outside the vocab");
      run.forced_prefix.push_back(vocab.id(*it));
    }
  }
  const Hypothesis hyp = decode(backward, query_ids, run);
  HalfResult out;
  out.tokens.assign(hyp.tokens.rbegin(), hyp.tokens.rend());
  out.logprob = free_logprob(hyp, run.forced_prefix.size());
  return out;
}

HalfResult generate_forward(const EncoderDecoder& forward, std::span<const TokenId> query_ids,
                            std::span<const TokenId> first_half, const DecodeConfig& cfg) {
  DecodeConfig run = cfg;
  run.forced_prefix.assign(first_half.begin(), first_half.end());
  const Hypothesis hyp = decode(forward, query_ids, run);
  return {hyp.tokens, free_logprob(hyp, first_half.size())};
}

ReplyResult reply(const Seq2BF& model, const CooccurrenceStats& stats, const NounLexicon& lexicon,
                  std::span<const std::string> query_words, const ReplyConfig& cfg) {
  const auto query_ids = encode_chars(query_words, model.vocab);
  ReplyResult result;

  if (!cfg.use_keyword) {
    auto first = generate_backward(model.backward, model.vocab, query_ids, std::nullopt, cfg.decode);
    auto full = generate_forward(model.forward, query_ids, first.tokens, cfg.decode);
    result.reply_chars = model.vocab.decode(full.tokens);
    result.backward_logprob = first.logprob;
    result.forward_logprob = full.logprob;
    return result;
  }

  const auto ranking = predict_keyword(stats, query_words, lexicon, lexicon.size());
  result.candidates.assign(ranking.begin(), ranking.begin() + static_cast<std::ptrdiff_t>(
                                                                  std::min(cfg.candidates, ranking.size())));
  for (const auto& cand : ranking) {
    HalfResult first;
    try {
      first = generate_backward(model.backward, model.vocab, query_ids, cand.term, cfg.decode);
    } catch (const KeywordError&) {
      continue;
    }
    auto full = generate_forward(model.forward, query_ids, first.tokens, cfg.decode);
    result.reply_chars = model.vocab.decode(full.tokens);
    result.keyword = cand.term;
    result.keyword_start = first.tokens.size() - utf8::decode(cand.term).size() + 1;
    result.backward_logprob = first.logprob;
    result.forward_logprob = full.logprob;
    result.pmi_score = cand.score;
    return result;
  }

  auto full = generate_forward(model.forward, query_ids, {}, cfg.decode);
  result.reply_chars = model.vocab.decode(full.tokens);
  result.forward_logprob = full.logprob;
  result.no_keyword = true;
  return result;
}

double joint_logprob(const Seq2BF& model, std::span<const TokenId> query_ids, std::span<const TokenId> reply_ids,
                     size_t k) {
  if (k < 1 || k > reply_ids.size()) throw Error("split index out of range");
  const IdSeq reversed_prefix(reply_ids.rend() - static_cast<std::ptrdiff_t>(k), reply_ids.rend());
  const auto bw = step_logprobs(model.backward, query_ids, reversed_prefix, true);
  const auto fw = step_logprobs(model.forward, query_ids, reply_ids, true);
  double total = 0.0;
  for (size_t i = 1; i < bw.size(); ++i) total += bw[i];
  for (size_t i = k; i < fw.size(); ++i) total += fw[i];
  return total;
}

}  // namespace seq2bf
