#pragma once

#include <condition_variable>
#include <cstddef>
#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "semswarm/ecosystem.hpp"

namespace semswarm::service {

struct AdmitRequest {
  SwarmParams params;
  Embedding prompt_embedding = Embedding::basis(0);
  std::string owner;
  std::size_t n_agents = 0;  // 0 picks the loop default
};

/// Outcome of an admission: the lifeform id, or an error code and message.
struct AdmitResult {
  std::optional<std::string> lifeform_id;
  std::string error_code;
  std::string error_message;
};

/// Owner of the shared ecosystem world. Admissions are queued and applied
/// between steps. In threaded mode a background thread steps the world; in
/// manual mode the caller drives it with pump().
class EcosystemLoop {
 public:
  struct Options {
    EcosystemConfig world;
    std::size_t agents_per_lifeform = 500;
    double max_steps_per_second = 30.0;  // 0 runs unthrottled
    std::size_t snapshot_interval = 10;  // steps between state snapshots
    bool threaded = true;
  };

  using AdmitCallback = std::function<void(const AdmitResult&)>;

  explicit EcosystemLoop(Options options);
  ~EcosystemLoop();

  EcosystemLoop(const EcosystemLoop&) = delete;
  EcosystemLoop& operator=(const EcosystemLoop&) = delete;

  /// Queues an admission; the callback runs on the stepping thread.
  void admit(AdmitRequest request, AdmitCallback done);

  /// Applies queued commands, then advances `steps` steps. Manual mode only.
  void pump(std::size_t steps = 0);

  /// Latest state export (lifeform registry and meta-rules).
  nlohmann::json state() const;

  void stop();

 private:
  struct Command {
    AdmitRequest request;
    AdmitCallback done;
  };

  void run();
  void apply_commands(std::deque<Command>& commands);
  void publish();

  Options options_;
  EcosystemWorld world_;  // touched only by the stepping side
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<Command> queue_;
  nlohmann::json snapshot_;
  bool stopping_ = false;
  std::thread thread_;
};

}  // namespace semswarm::service
