#include "semswarm/service/ecosystem_loop.hpp"

#include <chrono>

#include "semswarm/errors.hpp"

namespace semswarm::service {

EcosystemLoop::EcosystemLoop(Options options)
    : options_(options), world_(options.world), snapshot_(ecosystem_state_json(world_)) {
  if (options_.threaded) thread_ = std::thread([this] { run(); });
}

EcosystemLoop::~EcosystemLoop() { stop(); }

void EcosystemLoop::stop() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  cv_.notify_all();
  if (thread_.joinable()) thread_.join();
}

void EcosystemLoop::admit(AdmitRequest request, AdmitCallback done) {
  {
    std::lock_guard lock(mutex_);
    queue_.push_back({std::move(request), std::move(done)});
  }
  cv_.notify_all();
}

void EcosystemLoop::apply_commands(std::deque<Command>& commands) {
  for (auto& c : commands) {
    AdmitResult result;
    try {
      const std::size_t n =
          c.request.n_agents == 0 ? options_.agents_per_lifeform : c.request.n_agents;
      const Lifeform& lf =
          admit_lifeform(world_, c.request.params, c.request.prompt_embedding, c.request.owner, n);
      result.lifeform_id = lf.id;
    } catch (const CapacityExceeded& e) {
      result.error_code = "capacity_exceeded";
      result.error_message = e.what();
    } catch (const Error& e) {
      result.error_code = "bad_request";
      result.error_message = e.what();
    }
    publish();
    if (c.done) c.done(result);
  }
  commands.clear();
}

void EcosystemLoop::publish() {
  nlohmann::json snap = ecosystem_state_json(world_);
  std::lock_guard lock(mutex_);
  snapshot_ = std::move(snap);
}

void EcosystemLoop::pump(std::size_t steps) {
  std::deque<Command> commands;
  {
    std::lock_guard lock(mutex_);
    commands.swap(queue_);
  }
  apply_commands(commands);
  for (std::size_t s = 0; s < steps; ++s) ecosystem_step(world_);
  if (steps > 0) publish();
}

nlohmann::json EcosystemLoop::state() const {
  std::lock_guard lock(mutex_);
  return snapshot_;
}

void EcosystemLoop::run() {
  using clock = std::chrono::steady_clock;
  const auto period =
      options_.max_steps_per_second > 0.0
          ? std::chrono::duration_cast<clock::duration>(
                std::chrono::duration<double>(1.0 / options_.max_steps_per_second))
          : clock::duration::zero();
  auto next = clock::now();
  std::size_t since_publish = 0;
  for (;;) {
    std::deque<Command> commands;
    {
      std::unique_lock lock(mutex_);
      if (world_.agents.empty()) {
        cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
      } else if (period > clock::duration::zero()) {
        cv_.wait_until(lock, next, [&] { return stopping_; });
      }
      if (stopping_) return;
      commands.swap(queue_);
    }
    apply_commands(commands);
    if (world_.agents.empty()) continue;
    ecosystem_step(world_);
    if (++since_publish >= options_.snapshot_interval) {
      since_publish = 0;
      publish();
    }
    next = std::max(next + period, clock::now() - period);
  }
}

}  // namespace semswarm::service
