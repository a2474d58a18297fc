#include "semswarm/service/run_store.hpp"

#include "semswarm/run_log.hpp"

namespace semswarm::service {

RunStore::RunStore(std::filesystem::path root) : root_(std::move(root)) {
  std::filesystem::create_directories(root_);
}

std::string RunStore::persist(const RunHistory& history) {
  std::lock_guard lock(mutex_);
  return persist_run(history, root_);
}

RunHistory RunStore::load(std::string_view run_id) const {
  std::lock_guard lock(mutex_);
  return load_run(root_, run_id);
}

bool RunStore::contains(std::string_view run_id) const {
  std::lock_guard lock(mutex_);
  return valid_run_id(run_id) &&
         std::filesystem::exists(root_ / (std::string(run_id) + ".jsonl"));
}

}  // namespace semswarm::service
