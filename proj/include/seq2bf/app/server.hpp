#pragma once

#include <ostream>
#include <string>
#include <string_view>

#include "seq2bf/app/engine.hpp"

namespace httplib {
class Server;
}

namespace seq2bf::app {

inline constexpr size_t kMaxQueryChars = 500;

struct HttpReply {
  int status = 200;
  std::string body;
  /// Inference time; sent as a header so identical requests get identical bodies.
  double latency_ms = 0.0;
};

std::string health_body();

/// POST /v1/chat: {"query": string, "mode"?: string}. 400 on malformed
/// input, 413 above kMaxQueryChars code points, 500 on internal failure.
HttpReply handle_chat(const ChatEngine& engine, std::string_view body);

/// Registers /v1/health and /v1/chat with permissive CORS headers.
void install_routes(httplib::Server& server, const ChatEngine& engine);

/// Blocks until SIGINT/SIGTERM; in-flight requests finish before return.
void serve(const ChatEngine& engine, const std::string& host, int port, std::ostream& log);

}  // namespace seq2bf::app
