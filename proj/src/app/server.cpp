#include "seq2bf/app/server.hpp"

#include <httplib.h>

#include <atomic>
#include <chrono>
#include <csignal>
#include <json.hpp>
#include <ostream>
#include <thread>

#include "seq2bf/error.hpp"
#include "seq2bf/utf8.hpp"

namespace seq2bf::app {

using nlohmann::json;

namespace {

std::string error_body(const std::string& message) { return json{{"error", message}}.dump(); }

json reply_json(const std::string& query, Mode mode, const ReplyResult& r) {
  json out;
  out["query"] = query;
  out["mode"] = mode_name(mode);
  out["reply"] = r.reply_utf8();
  out["keyword"] = r.keyword ? json(*r.keyword) : json(nullptr);
  out["keyword_start"] = r.keyword ? json(r.keyword_start) : json(nullptr);
  out["pmi_score"] = r.pmi_score ? json(*r.pmi_score) : json(nullptr);
  json cands = json::array();
  for (const auto& c : r.candidates) cands.push_back({{"term", c.term}, {"score", c.score}});
  out["candidates"] = std::move(cands);
  out["degraded"] = r.no_keyword;
  out["version"] = "v1";
  return out;
}

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

}  // namespace

std::string health_body() { return json{{"status", "ok"}, {"model", "seq2bf"}}.dump(); }

HttpReply handle_chat(const ChatEngine& engine, std::string_view body) {
  json request;
  try {
    request = json::parse(body);
  } catch (const json::parse_error& e) {
    return {400, error_body(std::string("malformed JSON: ") + e.what())};
  }
  if (!request.is_object() || !request.contains("query") || !request["query"].is_string()) {
    return {400, error_body("body must be an object with a string 'query'")};
  }
  const std::string query = request["query"].get<std::string>();
  Mode mode = Mode::kSeq2BF;
  if (request.contains("mode")) {
    if (!request["mode"].is_string()) return {400, error_body("'mode' must be a string")};
    try {
      mode = parse_mode(request["mode"].get<std::string>());
    } catch (const ConfigError& e) {
      return {400, error_body(e.what())};
    }
  }
  if (utf8::decode(query).size() > kMaxQueryChars) {
    return {413, error_body("query longer than " + std::to_string(kMaxQueryChars) + " characters")};
  }
  try {
    const auto start = std::chrono::steady_clock::now();
    const auto result = engine.respond(query, mode);
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return {200, reply_json(query, mode, result).dump(), ms};
  } catch (const std::exception& e) {
    return {500, error_body(e.what())};
  }
}

void install_routes(httplib::Server& server, const ChatEngine& engine) {
  server.set_default_headers({
      {"Access-Control-Allow-Origin", "*"},
      {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
      {"Access-Control-Allow-Headers", "Content-Type"},
  });
  server.Get("/v1/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(health_body(), "application/json");
  });
  server.Post("/v1/chat", [&engine](const httplib::Request& req, httplib::Response& res) {
    const auto reply = handle_chat(engine, req.body);
    res.status = reply.status;
    res.set_header("X-Latency-Ms", std::to_string(reply.latency_ms));
    res.set_content(reply.body, "application/json; charset=utf-8");
  });
  server.Options(R"(/v1/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    res.status = 500;
    res.set_content(error_body(what), "application/json");
  });
}

void serve(const ChatEngine& engine, const std::string& host, int port, std::ostream& log) {
  httplib::Server server;
  install_routes(server, engine);
  if (!server.bind_to_port(host, port)) throw IoError("cannot bind " + host + ":" + std::to_string(port));
  g_stop = false;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::thread watcher([&] {
    while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    server.stop();
  });
  log << "listening on http://" << host << ':' << port << std::endl;
  server.listen_after_bind();
  g_stop = true;
  watcher.join();
  log << "server stopped" << std::endl;
}

}  // namespace seq2bf::app
