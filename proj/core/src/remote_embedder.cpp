#include "semswarm/remote_embedder.hpp"

#include <httplib.h>

#include <nlohmann/json.hpp>
#include <thread>

#include "semswarm/base64.hpp"
#include "semswarm/errors.hpp"

namespace semswarm {

std::string_view to_string(EmbedKind kind) {
  return kind == EmbedKind::kText ? "text" : "image";
}

namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path without trailing slash
};

Endpoint split_endpoint(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw EmbedServiceError("endpoint must be an absolute URL: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  Endpoint ep;
  ep.origin = url.substr(0, path_start);
  ep.prefix = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!ep.prefix.empty() && ep.prefix.back() == '/') ep.prefix.pop_back();
  return ep;
}

bool is_transient(int status) { return status >= 500 || status == 429; }

}  // namespace

Embedding remote_embed(const std::string& endpoint, EmbedKind kind,
                       std::span<const std::uint8_t> payload,
                       const RemoteEmbedOptions& options) {
  const Endpoint ep = split_endpoint(endpoint);
  nlohmann::json request;
  request["kind"] = to_string(kind);
  if (kind == EmbedKind::kText) {
    request["data"] = std::string(payload.begin(), payload.end());
  } else {
    request["data"] = base64_encode(payload);
  }
  const std::string body = request.dump();

  httplib::Client client(ep.origin);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(options.timeout);
  client.set_connection_timeout(secs.count() > 0 ? secs.count() : 1, 0);
  client.set_read_timeout(secs.count() > 0 ? secs.count() : 1, 0);

  std::string last_error;
  auto backoff = options.initial_backoff;
  for (int attempt = 0; attempt <= options.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    auto res = client.Post(ep.prefix + "/v1/embed", body, "application/json");
    if (!res) {
      last_error = "connection failed: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      last_error = "HTTP " + std::to_string(res->status);
      if (is_transient(res->status)) continue;
      break;
    }
    nlohmann::json reply;
    try {
      reply = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::parse_error& e) {
      throw ProtocolError(std::string("embedding response is not JSON: ") + e.what());
    }
    if (!reply.is_object() || !reply.contains("embedding") || !reply["embedding"].is_array()) {
      throw ProtocolError("embedding response lacks an \"embedding\" array");
    }
    const auto& arr = reply["embedding"];
    if (arr.size() != Embedding::kDimension) {
      throw ProtocolError("embedding response has " + std::to_string(arr.size()) +
                          " values, expected 512");
    }
    std::vector<double> values;
    values.reserve(arr.size());
    for (const auto& v : arr) {
      if (!v.is_number()) throw ProtocolError("embedding contains a non-number");
      values.push_back(v.get<double>());
    }
    try {
      return Embedding::from_raw(values);
    } catch (const InvalidParameter& e) {
      throw ProtocolError(e.what());
    }
  }
  throw EmbedServiceError("embedding service at " + endpoint + " failed: " + last_error);
}

RemoteEmbedder::RemoteEmbedder(std::string endpoint, RemoteEmbedOptions options,
                               std::size_t cache_size)
    : endpoint_(std::move(endpoint)), options_(options), cache_size_(cache_size) {}

std::size_t RemoteEmbedder::cache_hits() const {
  std::lock_guard lock(cache_mutex_);
  return cache_hits_;
}

std::vector<double> RemoteEmbedder::fetch(EmbedKind kind, std::span<const std::uint8_t> payload) {
  const std::uint64_t key = fnv1a64(
      std::string_view(reinterpret_cast<const char*>(payload.data()), payload.size()),
      kind == EmbedKind::kText ? 0x74657874ULL : 0x696d6167ULL);
  if (cache_size_ > 0) {
    std::lock_guard lock(cache_mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) {
      lru_.splice(lru_.begin(), lru_, it->second.position);
      ++cache_hits_;
      return it->second.values;
    }
  }

  in_flight_.acquire();
  Embedding e = [&] {
    try {
      return remote_embed(endpoint_, kind, payload, options_);
    } catch (...) {
      in_flight_.release();
      throw;
    }
  }();
  in_flight_.release();

  std::vector<double> values(e.values().begin(), e.values().end());
  if (cache_size_ > 0) {
    std::lock_guard lock(cache_mutex_);
    if (!cache_.contains(key)) {
      lru_.push_front(key);
      cache_.emplace(key, CacheEntry{values, lru_.begin()});
      if (cache_.size() > cache_size_) {
        cache_.erase(lru_.back());
        lru_.pop_back();
      }
    }
  }
  return values;
}

std::vector<double> RemoteEmbedder::text(std::string_view prompt) {
  return fetch(EmbedKind::kText,
               std::span(reinterpret_cast<const std::uint8_t*>(prompt.data()), prompt.size()));
}

std::vector<double> RemoteEmbedder::image(const FrameView& frame) {
  if (frame.image == nullptr) throw InvalidParameter("remote embedding needs a rendered image");
  const auto png = encode_png(*frame.image);
  return fetch(EmbedKind::kImage, png);
}

}  // namespace semswarm
