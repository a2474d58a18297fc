#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "semswarm/evolution.hpp"
#include "semswarm/service/ecosystem_loop.hpp"
#include "semswarm/service/protocol.hpp"
#include "semswarm/service/run_store.hpp"

namespace semswarm::service {

enum class SessionState { kIdle, kRunning, kPaused };

std::string_view to_string(SessionState s);

using EmbedderFactory = std::function<std::shared_ptr<EmbeddingProvider>(const EmbedderSpec&)>;

/// Everything a session needs from the server.
struct SessionDeps {
  std::shared_ptr<const MappingModel> mapping;
  EmbedderFactory embedder_factory;
  std::shared_ptr<RunStore> store;
  std::shared_ptr<EcosystemLoop> ecosystem;  // may be null
  EvolutionConfig defaults;
};

/// Builds a factory that calls make_embedder.
EmbedderFactory default_embedder_factory();

/// One client's control channel over at most one active run.
///
/// handle() only updates state and queues work; generations are computed by
/// advance(). A threaded session calls advance() from its own worker thread;
/// otherwise the caller drives it, which the state-machine tests rely on.
class Session {
 public:
  Session(std::string id, SessionDeps deps, std::shared_ptr<Outbox> outbox, bool threaded);
  ~Session();

  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  const std::string& id() const { return id_; }

  /// Parses and dispatches one client message. Replies go to the outbox.
  void handle_text(std::string_view text);
  void handle(const Message& m);

  /// Runs one generation of the active run if it is running. Returns false
  /// when there was nothing to do.
  bool advance();

  /// Stops the active run at the next generation boundary and persists its
  /// history. Further messages are rejected.
  void close();

  /// Blocks until the worker thread has exited (threaded sessions).
  void join();
  bool worker_exited() const { return worker_exited_; }

  SessionState state() const;
  std::optional<std::string> active_run_id() const;
  /// Runs owned by this session that are not finished or stopped.
  std::size_t live_runs() const;
  /// Generations currently being computed for this session.
  std::size_t generations_in_flight() const;
  std::chrono::system_clock::time_point created_at() const { return created_at_; }

 private:
  struct ActiveRun {
    std::string run_id;
    std::function<RunContext()> make;  // deferred construction
    std::optional<RunContext> context;
    std::optional<RunHistory> snapshot;  // last completed generation
    std::optional<std::string> pending_prompt;
    bool stopped = false;
  };

  void on_start_run(const Message& m);
  void on_pause(const Message& m);
  void on_resume(const Message& m);
  void on_refine(const Message& m);
  void on_branch(const Message& m);
  void on_admit(const Message& m);

  std::string new_run_id();
  std::shared_ptr<EmbeddingProvider> embedder() const;
  void stop_active_locked();
  void worker_loop();

  std::string id_;
  SessionDeps deps_;
  std::shared_ptr<Outbox> outbox_;
  std::chrono::system_clock::time_point created_at_;

  mutable std::mutex mutex_;
  std::condition_variable cv_;
  SessionState state_ = SessionState::kIdle;
  std::shared_ptr<ActiveRun> active_;
  std::optional<RunHistory> last_finished_;
  std::optional<std::int64_t> last_client_seq_;
  std::size_t in_flight_ = 0;
  std::size_t run_counter_ = 0;
  bool closed_ = false;
  std::atomic<bool> worker_exited_{true};
  std::thread worker_;
};

/// Registry of open sessions.
class SessionManager {
 public:
  SessionManager(SessionDeps deps, bool threaded);
  ~SessionManager();

  std::shared_ptr<Session> create(std::shared_ptr<Outbox> outbox);
  std::shared_ptr<Session> find(std::string_view id) const;
  /// Throws NotFound for an unknown or already closed id.
  void close(std::string_view id);
  std::size_t size() const;

 private:
  SessionDeps deps_;
  bool threaded_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>, std::less<>> sessions_;
  std::vector<std::shared_ptr<Session>> retired_;
};

/// Unique 128-bit hex token.
std::string random_token();

}  // namespace semswarm::service
