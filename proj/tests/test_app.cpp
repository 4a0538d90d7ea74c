#include <doctest.h>
#include <httplib.h>

#include <json.hpp>
#include <sstream>
#include <thread>

#include "fixtures.hpp"
#include "seq2bf/app/cli.hpp"
#include "seq2bf/app/config.hpp"
#include "seq2bf/app/engine.hpp"
#include "seq2bf/app/server.hpp"
#include "seq2bf/error.hpp"
#include "seq2bf/utf8.hpp"

using namespace seq2bf;
using namespace seq2bf::app;
using namespace seq2bf::testing;
using nlohmann::json;

namespace {

const std::filesystem::path kToy = SEQ2BF_TOY_DIR;

struct CliRun {
  int code = 0;
  std::string out;
  std::string err;
};

CliRun run(std::vector<std::string> args, const std::string& input = "") {
  args.insert(args.begin(), "seq2bf");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::istringstream in(input);
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), in, out, err);
  return {code, out.str(), err.str()};
}

// Builds vocab, stats and both generators for the toy fixture once.
const std::filesystem::path& toy_bundle() {
  static const std::filesystem::path manifest = [] {
    auto dir = temp_dir("app_bundle");
    const auto m = (dir / "bundle.txt").string();
    const auto train = (kToy / "train.tsv").string();
    const auto valid = (kToy / "valid.tsv").string();
    const auto vocab = (dir / "vocab.txt").string();
    REQUIRE(run({"build-vocab", "--corpus", train, "--vocab", vocab, "--bundle", m}).code == 0);
    REQUIRE(run({"pmi-train", "--corpus", train, "--lexicon", (kToy / "nouns.txt").string(), "--vocab", vocab, "--stats",
                 (dir / "stats.pmi").string(), "--bundle", m})
                .code == 0);
    const std::vector<std::string> common{"--embed-dim", "32", "--hidden-dim", "32", "--lr", "0.01", "--batch-size", "4",
                                          "--epochs", "60", "--patience", "60"};
    for (const std::string component : {"forward", "backward"}) {
      auto args = common;
      for (const auto& a : {std::string("train"), std::string("--component"), component, std::string("--corpus"), train,
                            std::string("--valid"), valid, std::string("--vocab"), vocab, std::string("--out"),
                            (dir / (component + ".ckpt")).string(), std::string("--bundle"), m,
                            std::string("--log"), (dir / (component + ".log")).string()}) {
        args.push_back(a);
      }
      REQUIRE(run(args).code == 0);
    }
    return dir / "bundle.txt";
  }();
  return manifest;
}

}  // namespace

TEST_CASE("RunConfig") {
  RunConfig cfg;
  CHECK(cfg.embed_dim == 64);
  CHECK(cfg.hidden_dim == 64);
  CHECK_NOTHROW(cfg.validate());
  const auto hash = cfg.hash();
  CHECK(hash.size() == 16);
  cfg.seed = 2;
  CHECK(cfg.hash() != hash);

  RunConfig pinned;
  pinned.apply_published_defaults();
  CHECK(pinned.embed_dim == 500);
  CHECK(pinned.hidden_dim == 500);
  CHECK(pinned.batch_size == 50);
  CHECK(pinned.learning_rate == 0.002);
  CHECK(pinned.decay == 0.99);
  CHECK(pinned.epsilon == 1e-8);
  CHECK(pinned.init_range == 0.08);
  CHECK(pinned.vocab_cap == 4000);
  CHECK(pinned.embedding_learning_rate == doctest::Approx(20.0));
  CHECK(pinned.to_text().find("embed_dim=500\n") != std::string::npos);

  RunConfig bad;
  bad.batch_size = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = RunConfig{};
  bad.decay = 1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("cli usage errors exit 2") {
  CHECK(run({}).code == 2);
  auto unknown = run({"build-vocab", "--bogus"});
  CHECK(unknown.code == 2);
  CHECK(unknown.err.find("Usage") != std::string::npos);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"train", "--component", "sideways", "--corpus", "x", "--vocab", "v", "--out", "o"}).code == 2);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("cli runtime failures exit 1") {
  auto r = run({"build-vocab", "--corpus", "/nonexistent/corpus.tsv", "--vocab", "/tmp/never.txt"});
  CHECK(r.code == 1);
  CHECK(r.err.find("error") != std::string::npos);
  CHECK(run({"--batch-size", "0", "build-vocab", "--corpus", "x", "--vocab", "y"}).code == 1);
}

TEST_CASE("cli prints the resolved config and honours --paper-defaults") {
  auto dir = temp_dir("app_pinned");
  auto r = run({"--paper-defaults", "--hidden-dim", "7", "--seed", "42", "build-vocab", "--corpus",
                (kToy / "train.tsv").string(), "--vocab", (dir / "v.txt").string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("# resolved config (hash ") != std::string::npos);
  CHECK(r.out.find("seed=42\n") != std::string::npos);
  CHECK(r.out.find("embed_dim=500\n") != std::string::npos);
  CHECK(r.out.find("hidden_dim=7\n") != std::string::npos);
  CHECK(r.out.find("embedding_learning_rate=20") != std::string::npos);
  CHECK(std::filesystem::exists(dir / "v.txt.config"));
}

TEST_CASE("config file supplies option values") {
  auto dir = temp_dir("app_config");
  write_file(dir / "run.ini", "seed=9\nvocab-cap=30\n");
  auto r = run({"--config", (dir / "run.ini").string(), "build-vocab", "--corpus", (kToy / "train.tsv").string(),
                "--vocab", (dir / "v.txt").string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("seed=9\n") != std::string::npos);
  CHECK(r.out.find("vocab_cap=30\n") != std::string::npos);
}

TEST_CASE("eval on identical candidates and references") {
  auto dir = temp_dir("app_eval");
  const auto train = (kToy / "train.tsv").string();
  auto r = run({"eval", "--candidates", train, "--references", train, "--corpus", train, "--report",
                (dir / "report.txt").string()});
  REQUIRE(r.code == 0);
  std::ifstream in(dir / "report.txt");
  std::stringstream text;
  text << in.rdbuf();
  CHECK(text.str().find("bleu2=1\n") != std::string::npos);
  CHECK(text.str().find("config_hash=") != std::string::npos);
}

TEST_CASE("end-to-end bundle") {
  const auto& manifest = toy_bundle();
  const auto dir = manifest.parent_path();

  SUBCASE("artifacts record the config hash") {
    CHECK(std::filesystem::exists(dir / "stats.pmi.config"));
    CHECK(std::filesystem::exists(dir / "forward.ckpt.config"));
    auto loaded = load_model(dir / "forward.ckpt");
    CHECK(loaded.metadata.at("config_hash").size() == 16);
    std::ifstream log(dir / "forward.log");
    std::string header;
    std::getline(log, header);
    CHECK(header == "epoch\ttrain_xent\tvalid_bleu2");
  }

  SUBCASE("generate --mode seq2bf emits keyword columns") {
    auto out = (dir / "gen.tsv").string();
    auto r = run({"generate", "--mode", "seq2bf", "--bundle", manifest.string(), "--input",
                  (kToy / "queries.txt").string(), "--output", out});
    REQUIRE(r.code == 0);
    std::ifstream in(out);
    std::string line;
    std::getline(in, line);
    CHECK(line == "query\treply\tkeyword\tkeyword_start\tpmi_score");
    size_t rows = 0;
    while (std::getline(in, line)) {
      ++rows;
      std::vector<std::string> cols;
      std::stringstream ss(line);
      std::string col;
      while (std::getline(ss, col, '\t')) cols.push_back(col);
      REQUIRE(cols.size() == 5);
      const auto reply = utf8::decode(cols[1]);
      const auto kw = utf8::decode(cols[2]);
      const size_t start = std::stoul(cols[3]);
      CHECK(reply.substr(start - 1, kw.size()) == kw);
    }
    CHECK(rows == 6);
  }

  SUBCASE("generate reads stdin and other modes leave the keyword empty") {
    auto r = run({"generate", "--mode", "seq2bf-nokw", "--bundle", manifest.string()}, "so hungry\n");
    REQUIRE(r.code == 0);
    CHECK(r.out.find("so hungry\t") != std::string::npos);
    CHECK(r.out.find("\t\t\t\n") != std::string::npos);
  }

  SUBCASE("chat REPL switches mode") {
    auto r = run({"chat", "--bundle", manifest.string()}, "rain today\n:mode seq2seq\nrain today\n:quit\n");
    REQUIRE(r.code == 0);
    CHECK(r.out.find("[keyword ") != std::string::npos);
    CHECK(r.out.find("mode seq2seq") != std::string::npos);
  }

  SUBCASE("vocab hash mismatch is rejected") {
    auto other = temp_dir("app_bad_bundle");
    std::filesystem::copy(dir, other, std::filesystem::copy_options::recursive | std::filesystem::copy_options::overwrite_existing);
    Vocab(U"xyz").save(other / "vocab.txt");
    CHECK_THROWS_AS(load_bundle(other / "bundle.txt"), FormatError);
  }
}

TEST_CASE("chat handler") {
  const auto bundle = load_bundle(toy_bundle());
  const ChatEngine engine(bundle, ReplyConfig{});

  SUBCASE("seq2bf reply carries the keyword at keyword_start") {
    auto r = handle_chat(engine, R"({"query": "cold wind", "mode": "seq2bf"})");
    REQUIRE(r.status == 200);
    auto body = json::parse(r.body);
    CHECK(body["query"] == "cold wind");
    REQUIRE(body["keyword"].is_string());
    const auto reply = utf8::decode(body["reply"].get<std::string>());
    const auto kw = utf8::decode(body["keyword"].get<std::string>());
    const size_t start = body["keyword_start"].get<size_t>();
    CHECK(reply.substr(start - 1, kw.size()) == kw);
    CHECK(body["pmi_score"].is_number());
    CHECK(body["candidates"].size() == 5);
    CHECK(body["candidates"][0]["term"] == body["keyword"]);
  }
  SUBCASE("default mode is seq2bf") {
    auto body = json::parse(handle_chat(engine, R"({"query": "so tired"})").body);
    CHECK(body["mode"] == "seq2bf");
  }
  SUBCASE("ablation and baseline leave keyword fields null") {
    for (const char* mode : {"seq2bf-nokw", "seq2seq"}) {
      auto r = handle_chat(engine, json{{"query", "so hungry"}, {"mode", mode}}.dump());
      REQUIRE(r.status == 200);
      auto body = json::parse(r.body);
      CHECK(body["keyword"].is_null());
      CHECK(body["keyword_start"].is_null());
      CHECK(body["pmi_score"].is_null());
    }
  }
  SUBCASE("identical requests give identical bodies") {
    const std::string req = R"({"query": "sunny day", "mode": "seq2bf"})";
    CHECK(handle_chat(engine, req).body == handle_chat(engine, req).body);
  }
  SUBCASE("malformed requests") {
    CHECK(handle_chat(engine, "{not json").status == 400);
    CHECK(handle_chat(engine, R"({"text": "x"})").status == 400);
    CHECK(handle_chat(engine, R"({"query": 3})").status == 400);
    CHECK(handle_chat(engine, R"({"query": "x", "mode": "other"})").status == 400);
    CHECK(json::parse(handle_chat(engine, "[").body).contains("error"));
  }
  SUBCASE("overlong query") {
    std::string long_query;
    for (int i = 0; i < 501; ++i) long_query += "中";
    CHECK(handle_chat(engine, json{{"query", long_query}}.dump()).status == 413);
    long_query.resize(long_query.size() - 3);
    CHECK(handle_chat(engine, json{{"query", long_query}}.dump()).status == 200);
  }
  SUBCASE("internal failure is a 500") {
    Bundle broken;
    broken.model.vocab = bundle.model.vocab;
    broken.model.forward = EncoderDecoder({3, 2, 2});
    broken.model.backward = EncoderDecoder({3, 2, 2});
    broken.stats = bundle.stats;
    broken.lexicon = bundle.lexicon;
    const ChatEngine bad(broken, ReplyConfig{});
    auto r = handle_chat(bad, R"({"query": "rain today", "mode": "seq2seq"})");
    CHECK(r.status == 500);
    CHECK(json::parse(r.body).contains("error"));
  }
}

TEST_CASE("http service") {
  const auto bundle = load_bundle(toy_bundle());
  const ChatEngine engine(bundle, ReplyConfig{});
  httplib::Server server;
  install_routes(server, engine);
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  auto health = client.Get("/v1/health");
  REQUIRE(health);
  CHECK(health->status == 200);
  CHECK(json::parse(health->body) == json{{"status", "ok"}, {"model", "seq2bf"}});
  CHECK(health->get_header_value("Access-Control-Allow-Origin") == "*");

  auto chat = client.Post("/v1/chat", R"({"query": "rain today", "mode": "seq2bf"})", "application/json");
  REQUIRE(chat);
  CHECK(chat->status == 200);
  CHECK(json::parse(chat->body)["keyword"].is_string());

  auto bad = client.Post("/v1/chat", "{oops", "application/json");
  REQUIRE(bad);
  CHECK(bad->status == 400);

  auto again = client.Get("/v1/health");
  REQUIRE(again);
  CHECK(again->status == 200);

  auto preflight = client.Options("/v1/chat");
  REQUIRE(preflight);
  CHECK(preflight->status == 204);

  server.stop();
  thread.join();
}
