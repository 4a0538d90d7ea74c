#include <doctest.h>

#include <algorithm>
#include <map>

#include "fixtures.hpp"
#include "seq2bf/corpus.hpp"
#include "seq2bf/error.hpp"
#include "seq2bf/utf8.hpp"

using namespace seq2bf;
using namespace seq2bf::testing;

TEST_CASE("parse_pair_line splits query and reply words") {
  auto pair = parse_pair_line("how are you\tfine thanks");
  REQUIRE(pair);
  CHECK(pair->query_words == std::vector<std::string>{"how", "are", "you"});
  CHECK(pair->reply_words == std::vector<std::string>{"fine", "thanks"});
  CHECK(pair->query_chars == U"howareyou");
  CHECK(pair->reply_chars == U"finethanks");
}

TEST_CASE("parse_pair_line rejects malformed lines") {
  CHECK_FALSE(parse_pair_line("no tab here"));
  CHECK_FALSE(parse_pair_line("\treply only"));
  CHECK_FALSE(parse_pair_line("query only\t"));
}

TEST_CASE("concatenated word characters reproduce the character sequence") {
  auto pair = pair_of("李 有 男友", "有 绯闻 男友");
  CHECK(pair.query_chars == utf8::decode("李有男友"));
  CHECK(pair.reply_chars == join_chars(pair.reply_words));
}

TEST_CASE("load_pairs counts skipped lines") {
  auto dir = temp_dir("corpus_load");
  write_file(dir / "c.tsv", "a b\tc d\nmalformed line\ne\tf\n");
  auto corpus = load_pairs(dir / "c.tsv");
  CHECK(corpus.pairs.size() == 2);
  CHECK(corpus.skipped == 1);
  CHECK(corpus.pairs[1].query_words == std::vector<std::string>{"e"});
}

TEST_CASE("load_pairs fails on mostly malformed or missing files") {
  auto dir = temp_dir("corpus_bad");
  write_file(dir / "bad.tsv", "x\ny\na\tb\n");
  CHECK_THROWS_AS(load_pairs(dir / "bad.tsv"), CorpusFormatError);
  CHECK_THROWS_AS(load_pairs(dir / "missing.tsv"), IoError);
}

TEST_CASE("build_vocab keeps the most frequent characters") {
  auto pairs = pairs_of({{"ab", "ba"}, {"a", "b"}});
  CHECK(build_vocab(pairs, 10).size() == 6);

  SUBCASE("ties are broken by code point") {
    auto tie = pairs_of({{"aaaaa", "bbbbb"}});
    auto v = build_vocab(tie, 5);
    CHECK(v.size() == 5);
    CHECK(v.contains(U'a'));
    CHECK_FALSE(v.contains(U'b'));
  }
  SUBCASE("cap below 5 is rejected") { CHECK_THROWS_AS(build_vocab(pairs, 4), ConfigError); }
}

TEST_CASE("build_vocab over 5000 distinct characters keeps 3996") {
  // Code points 0x4E00.. ; the last 3996 of them appear twice, the rest once,
  // so frequency must beat code-point order.
  std::u32string query;
  std::u32string reply;
  for (char32_t i = 0; i < 5000; ++i) {
    const char32_t c = 0x4E00 + i;
    query.push_back(c);
    if (i >= 1004) reply.push_back(c);
  }
  DialoguePair p;
  p.query_chars = query;
  p.reply_chars = reply;
  auto v = build_vocab(std::span(&p, 1), 4000);
  CHECK(v.size() == 4000);
  CHECK(v.characters().size() == 3996);
  // Oracle: the expected kept set in id order is exactly the twice-seen block.
  CHECK(v.characters() == reply);
  CHECK(v.id(0x4E00) == Vocab::kUnk);
  CHECK(v.id(0x4E00 + 1004) == Vocab::kReserved);
}

TEST_CASE("build_vocab is a function of the character multiset") {
  auto a = pairs_of({{"abc", "cab"}, {"zz", "y"}});
  auto b = pairs_of({{"zz", "y"}, {"bac", "bca"}});
  CHECK(build_vocab(a, 100) == build_vocab(b, 100));
}

TEST_CASE("encode_chars") {
  Vocab v(U"abc");
  CHECK(encode_chars(std::vector<std::string>{}, v).empty());
  CHECK(encode_chars(std::vector<std::string>{"ab", "c"}, v) == IdSeq{4, 5, 6});
  CHECK(encode_chars(std::vector<std::string>{"ax"}, v) == IdSeq{4, Vocab::kUnk});
}

TEST_CASE("decode inverts encode for in-vocab text") {
  Rng rng(7);
  Vocab v(U"abcdefgh");
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::string> words;
    for (size_t n = uniform_index(rng, 4); n > 0; --n) words.push_back(random_word(rng, 1 + uniform_index(rng, 4), "abcdefgh"));
    CHECK(v.decode(encode_chars(words, v)) == join_chars(words));
  }
}

TEST_CASE("vocab file round trip") {
  auto dir = temp_dir("vocab_file");
  Vocab v(U"a中b");
  v.save(dir / "vocab.txt");
  std::ifstream in(dir / "vocab.txt");
  std::string first;
  std::getline(in, first);
  CHECK(first == "<pad>");
  auto loaded = Vocab::load(dir / "vocab.txt");
  CHECK(loaded == v);
  CHECK(loaded.hash() == v.hash());
  CHECK(loaded.id(U'中') == 5);
}

TEST_CASE("make_lexicon drops out-of-vocab and rare terms") {
  auto pairs = pairs_of({{"q", "cat dog"}, {"q", "cat"}});
  auto v = build_vocab(pairs, 100);
  std::vector<std::string> raw{"cat", "dog", "zebra", "cow"};
  auto lex = make_lexicon(raw, v, pairs, 2);
  CHECK(lex.terms == std::vector<std::string>{"cat"});
  CHECK(lex.dropped_oov == 2);  // zebra, cow
  CHECK(lex.dropped_rare == 1);  // dog seen once
}

TEST_CASE("make_batches sizes, determinism and padding") {
  std::vector<Example> exs;
  Rng rng(3);
  for (int i = 0; i < 101; ++i) {
    IdSeq q(1 + uniform_index(rng, 6), 4);
    IdSeq t(1 + uniform_index(rng, 6), 5);
    exs.push_back({q, t});
  }
  auto batches = make_batches(exs, 50, 11);
  REQUIRE(batches.size() == 3);
  CHECK(batches[0].rows == 50);
  CHECK(batches[1].rows == 50);
  CHECK(batches[2].rows == 1);

  auto again = make_batches(exs, 50, 11);
  for (size_t b = 0; b < 3; ++b) {
    CHECK(again[b].query_ids == batches[b].query_ids);
    CHECK(again[b].target_ids == batches[b].target_ids);
  }

  for (const auto& batch : batches) {
    for (size_t r = 0; r < batch.rows; ++r) {
      const auto* qrow = batch.query_ids.data() + r * batch.query_width;
      for (size_t i = batch.query_lengths[r]; i < batch.query_width; ++i) CHECK(qrow[i] == Vocab::kPad);
      const auto* trow = batch.target_ids.data() + r * batch.target_width;
      const size_t len = batch.target_lengths[r];
      CHECK(trow[len - 1] == Vocab::kEos);
      CHECK(std::count(trow, trow + batch.target_width, Vocab::kEos) == 1);
      for (size_t i = len; i < batch.target_width; ++i) CHECK(trow[i] == Vocab::kPad);
    }
  }
}

TEST_CASE("target width covers the longest reply plus EOS") {
  std::vector<Example> exs{{{4}, {5, 5}}, {{4}, {5, 5, 5, 5, 5}}};
  auto batch = make_batch(exs);
  CHECK(batch.target_width == 6);
  const IdSeq short_row(batch.target_ids.begin(), batch.target_ids.begin() + 6);
  CHECK(short_row == IdSeq{5, 5, Vocab::kEos, Vocab::kPad, Vocab::kPad, Vocab::kPad});
}

TEST_CASE("make_batches rejects a zero batch size") {
  std::vector<Example> exs{{{4}, {5}}};
  CHECK_THROWS_AS(make_batches(exs, 0, 1), ConfigError);
}
