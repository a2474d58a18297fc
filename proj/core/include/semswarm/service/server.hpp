#pragma once

#include <cstddef>
#include <memory>
#include <string>

#include "semswarm/service/session.hpp"

namespace semswarm::service {

struct ServerOptions {
  std::string address = "127.0.0.1";
  unsigned short port = 8080;  // 0 binds an ephemeral port
  std::size_t io_threads = 2;
};

/// HTTP + WebSocket front end.
///
///   GET /healthz             -> {"status": "ok"}
///   GET /v1/runs/{id}        -> {"header": {...}, "records": [...]}
///   GET /v1/ecosystem/state  -> ecosystem registry and meta-rules
///   /v1/ws                   -> one Session per connection
class Server {
 public:
  Server(ServerOptions options, SessionDeps deps);
  ~Server();

  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds and starts the io threads; returns the bound port.
  unsigned short start();
  void stop();
  /// Blocks until stop() is called from another thread or a signal handler.
  void wait();

  SessionManager& sessions();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace semswarm::service
