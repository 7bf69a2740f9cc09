#pragma once

// WebSocket service: every connection to /session owns one interactive
// session; /healthz answers "ok". Messages are JSON text frames tagged with
// "proto": "worldwalk/1".

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "worldwalk/session.hpp"

namespace worldwalk {

inline constexpr const char* kProtocol = "worldwalk/1";

struct ServerConfig {
  std::string host = "127.0.0.1";
  std::uint16_t port = 8765;  // 0 picks a free port
  SessionConfig session;      // defaults for every connection
  std::string generator = "passthrough";
  std::size_t queue_depth = 8;  // pending actions per connection
  std::size_t compute_threads = 0;  // 0: hardware concurrency
  std::optional<std::filesystem::path> static_dir;  // optional UI assets served over HTTP

  /// Applies WORLDWALK_BIND ("host:port") and WORLDWALK_SCENE (scene file) when set.
  void apply_environment();
};

class Server {
 public:
  explicit Server(ServerConfig config);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds and starts accepting on background threads. Throws IoError when
  /// the address cannot be bound.
  void start();
  /// Blocks until stop() is called from another thread or a signal handler.
  void wait();
  void stop();
  std::uint16_t port() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace worldwalk
