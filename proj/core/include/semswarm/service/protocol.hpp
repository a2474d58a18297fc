#pragma once

#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "semswarm/evolution.hpp"

namespace semswarm::service {

inline constexpr int kProtocolVersion = 1;

/// Wire envelope: {"v": 1, "type": ..., "seq": ..., "payload": {...}}.
/// Unknown envelope and payload fields are ignored.
struct Message {
  std::string type;
  nlohmann::json payload = nlohmann::json::object();
  std::optional<std::int64_t> seq;
};

namespace msg {
// client -> server
inline constexpr std::string_view kStartRun = "start_run";
inline constexpr std::string_view kPause = "pause";
inline constexpr std::string_view kResume = "resume";
inline constexpr std::string_view kRefine = "refine";
inline constexpr std::string_view kBranch = "branch";
inline constexpr std::string_view kAdmit = "admit";
inline constexpr std::string_view kPing = "ping";
// server -> client
inline constexpr std::string_view kAck = "ack";
inline constexpr std::string_view kError = "error";
inline constexpr std::string_view kPong = "pong";
inline constexpr std::string_view kGenerationUpdate = "generation_update";
inline constexpr std::string_view kRunFinished = "run_finished";
inline constexpr std::string_view kRunFailed = "run_failed";
}  // namespace msg

namespace code {
inline constexpr std::string_view kBadJson = "bad_json";
inline constexpr std::string_view kUnknownType = "unknown_type";
inline constexpr std::string_view kBadRequest = "bad_request";
inline constexpr std::string_view kBadSeq = "bad_seq";
inline constexpr std::string_view kNotPaused = "not_paused";
inline constexpr std::string_view kNoRun = "no_run";
inline constexpr std::string_view kRunActive = "run_active";
inline constexpr std::string_view kInvalidState = "invalid_state";
inline constexpr std::string_view kNotFound = "not_found";
inline constexpr std::string_view kCapacityExceeded = "capacity_exceeded";
inline constexpr std::string_view kNoEcosystem = "no_ecosystem";
}  // namespace code

bool is_client_type(std::string_view type);

/// Throws ProtocolError when the text is not a JSON object with a string
/// "type", or when "payload" or "seq" have the wrong type.
Message parse_message(std::string_view text);

std::string encode_message(const Message& m);

/// Server-side sender for one connection. Stamps strictly increasing seq
/// numbers and hands encoded text to a non-blocking sink.
class Outbox {
 public:
  using Sink = std::function<void(std::string)>;

  explicit Outbox(Sink sink) : sink_(std::move(sink)) {}

  void send(std::string_view type, nlohmann::json payload);
  void ack(std::string_view for_type, std::optional<std::int64_t> reply_to,
           nlohmann::json extra = nlohmann::json::object());
  void error(std::string_view error_code, std::string_view message,
             std::optional<std::int64_t> reply_to = std::nullopt);

  std::int64_t last_seq() const;

 private:
  mutable std::mutex mutex_;
  Sink sink_;
  std::int64_t seq_ = 0;
};

nlohmann::json params_json(const SwarmParams& params);

/// generation_update payload; the frame is a base64 PNG of the best candidate.
nlohmann::json generation_update_payload(const std::string& run_id,
                                         const GenerationOutcome& outcome);

}  // namespace semswarm::service
