#pragma once

#include <filesystem>
#include <mutex>
#include <string>
#include <string_view>

#include "semswarm/evolution.hpp"

namespace semswarm::service {

/// Directory of {run_id}.jsonl run logs shared by all sessions.
class RunStore {
 public:
  explicit RunStore(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }

  std::string persist(const RunHistory& history);

  /// Throws NotFound or ParseError.
  RunHistory load(std::string_view run_id) const;

  bool contains(std::string_view run_id) const;

 private:
  std::filesystem::path root_;
  mutable std::mutex mutex_;
};

}  // namespace semswarm::service
