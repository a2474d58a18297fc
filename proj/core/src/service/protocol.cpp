#include "semswarm/service/protocol.hpp"

#include <algorithm>
#include <array>

#include "semswarm/base64.hpp"
#include "semswarm/errors.hpp"

namespace semswarm::service {

using nlohmann::json;

bool is_client_type(std::string_view type) {
  static constexpr std::array kTypes{msg::kStartRun, msg::kPause,  msg::kResume, msg::kRefine,
                                     msg::kBranch,   msg::kAdmit, msg::kPing};
  return std::find(kTypes.begin(), kTypes.end(), type) != kTypes.end();
}

Message parse_message(std::string_view text) {
  json j = json::parse(text.begin(), text.end(), nullptr, false);
  if (j.is_discarded()) throw ProtocolError("message is not valid JSON");
  if (!j.is_object()) throw ProtocolError("message must be a JSON object");
  const auto type = j.find("type");
  if (type == j.end() || !type->is_string()) throw ProtocolError("message has no string \"type\"");
  Message m;
  m.type = type->get<std::string>();
  if (const auto p = j.find("payload"); p != j.end() && !p->is_null()) {
    if (!p->is_object()) throw ProtocolError("\"payload\" must be an object");
    m.payload = *p;
  }
  if (const auto s = j.find("seq"); s != j.end() && !s->is_null()) {
    if (!s->is_number_integer()) throw ProtocolError("\"seq\" must be an integer");
    m.seq = s->get<std::int64_t>();
  }
  return m;
}

std::string encode_message(const Message& m) {
  json j = {{"v", kProtocolVersion}, {"type", m.type}, {"payload", m.payload}};
  if (m.seq) j["seq"] = *m.seq;
  return j.dump();
}

void Outbox::send(std::string_view type, json payload) {
  std::lock_guard lock(mutex_);
  Message m{std::string(type), std::move(payload), ++seq_};
  sink_(encode_message(m));
}

void Outbox::ack(std::string_view for_type, std::optional<std::int64_t> reply_to, json extra) {
  extra["for"] = for_type;
  if (reply_to) extra["reply_to"] = *reply_to;
  send(msg::kAck, std::move(extra));
}

void Outbox::error(std::string_view error_code, std::string_view message,
                   std::optional<std::int64_t> reply_to) {
  json payload = {{"code", error_code}, {"message", message}};
  if (reply_to) payload["reply_to"] = *reply_to;
  send(msg::kError, std::move(payload));
}

std::int64_t Outbox::last_seq() const {
  std::lock_guard lock(mutex_);
  return seq_;
}

json params_json(const SwarmParams& params) {
  json out = json::object();
  const auto v = params.to_array();
  for (std::size_t i = 0; i < v.size(); ++i) out[std::string(kParamBounds[i].name)] = v[i];
  return out;
}

json generation_update_payload(const std::string& run_id, const GenerationOutcome& outcome) {
  const GenerationRecord& r = outcome.record;
  json payload = {
      {"run_id", run_id},
      {"generation", r.generation},
      {"losses", r.losses},
      {"semantic_losses", r.semantic_losses},
      {"best_index", r.best_index},
      {"best_loss", r.best_loss},
      {"best_so_far_loss", r.best_so_far_loss},
      {"best_params", params_json(r.best_params)},
      {"diversity", r.diversity},
      {"noise_injected", r.noise_injected},
      {"sigma", r.sigma},
  };
  if (outcome.best_frame.width > 0) {
    const auto png = encode_png(outcome.best_frame);
    payload["frame_png"] = base64_encode(png);
  }
  return payload;
}

}  // namespace semswarm::service
