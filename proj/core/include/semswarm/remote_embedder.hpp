#pragma once

#include <chrono>
#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <semaphore>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "semswarm/semantic.hpp"

namespace semswarm {

enum class EmbedKind { kText, kImage };

std::string_view to_string(EmbedKind kind);

struct RemoteEmbedOptions {
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{100};
  std::chrono::milliseconds timeout{30'000};
};

/// One request against the embedding wire protocol:
///   POST {endpoint}/v1/embed  {"kind": "text"|"image", "data": text | base64 PNG}
///   200 -> {"embedding": [512 numbers], "model": string}
/// Connection failures, 5xx and 429 are retried with exponential backoff.
/// Throws EmbedServiceError when the service never answers 200 and
/// ProtocolError on a malformed body or a vector that is not 512 long.
/// The returned embedding is renormalized.
Embedding remote_embed(const std::string& endpoint, EmbedKind kind,
                       std::span<const std::uint8_t> payload,
                       const RemoteEmbedOptions& options = {});

/// Embedding provider backed by a remote service. Bounds in-flight requests and
/// caches recent results keyed by payload digest.
class RemoteEmbedder final : public EmbeddingProvider {
 public:
  static constexpr std::size_t kDefaultMaxInFlight = 8;
  static constexpr std::size_t kDefaultCacheSize = 1024;

  explicit RemoteEmbedder(std::string endpoint, RemoteEmbedOptions options = {},
                          std::size_t cache_size = kDefaultCacheSize);

  std::vector<double> text(std::string_view prompt) override;
  std::vector<double> image(const FrameView& frame) override;
  bool needs_rendered_images() const override { return true; }
  std::string model_id() const override { return "remote:" + endpoint_; }

  const std::string& endpoint() const { return endpoint_; }
  std::size_t cache_hits() const;

 private:
  std::vector<double> fetch(EmbedKind kind, std::span<const std::uint8_t> payload);

  std::string endpoint_;
  RemoteEmbedOptions options_;
  std::counting_semaphore<kDefaultMaxInFlight> in_flight_{kDefaultMaxInFlight};

  mutable std::mutex cache_mutex_;
  std::size_t cache_size_;
  std::size_t cache_hits_ = 0;
  std::list<std::uint64_t> lru_;
  struct CacheEntry {
    std::vector<double> values;
    std::list<std::uint64_t>::iterator position;
  };
  std::unordered_map<std::uint64_t, CacheEntry> cache_;
};

}  // namespace semswarm
