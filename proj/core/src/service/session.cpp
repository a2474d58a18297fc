#include "semswarm/service/session.hpp"

#include <cstdio>
#include <random>

#include "semswarm/errors.hpp"
#include "semswarm/run_log.hpp"

namespace semswarm::service {

using nlohmann::json;

std::string_view to_string(SessionState s) {
  switch (s) {
    case SessionState::kIdle:
      return "idle";
    case SessionState::kRunning:
      return "running";
    case SessionState::kPaused:
      return "paused";
  }
  return "unknown";
}

EmbedderFactory default_embedder_factory() {
  return [](const EmbedderSpec& spec) -> std::shared_ptr<EmbeddingProvider> {
    return make_embedder(spec);
  };
}

std::string random_token() {
  static std::mutex m;
  static std::random_device rd;
  std::lock_guard lock(m);
  std::uint64_t a = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  std::uint64_t b = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  char buf[33];
  std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(a),
                static_cast<unsigned long long>(b));
  return buf;
}

Session::Session(std::string id, SessionDeps deps, std::shared_ptr<Outbox> outbox, bool threaded)
    : id_(std::move(id)),
      deps_(std::move(deps)),
      outbox_(std::move(outbox)),
      created_at_(std::chrono::system_clock::now()) {
  if (threaded) {
    worker_exited_ = false;
    worker_ = std::thread([this] { worker_loop(); });
  }
}

Session::~Session() {
  close();
  join();
}

SessionState Session::state() const {
  std::lock_guard lock(mutex_);
  return state_;
}

std::optional<std::string> Session::active_run_id() const {
  std::lock_guard lock(mutex_);
  if (!active_) return std::nullopt;
  return active_->run_id;
}

std::size_t Session::live_runs() const {
  std::lock_guard lock(mutex_);
  return active_ ? 1 : 0;
}

std::size_t Session::generations_in_flight() const {
  std::lock_guard lock(mutex_);
  return in_flight_;
}

std::shared_ptr<EmbeddingProvider> Session::embedder() const {
  return deps_.embedder_factory(deps_.defaults.embedder);
}

std::string Session::new_run_id() { return "run-" + random_token().substr(0, 24); }

void Session::handle_text(std::string_view text) {
  Message m;
  try {
    m = parse_message(text);
  } catch (const ProtocolError& e) {
    outbox_->error(code::kBadJson, e.what());
    return;
  }
  handle(m);
}

void Session::handle(const Message& m) {
  {
    std::lock_guard lock(mutex_);
    if (closed_) {
      outbox_->error(code::kInvalidState, "session is closed", m.seq);
      return;
    }
    if (m.seq) {
      if (last_client_seq_ && *m.seq <= *last_client_seq_) {
        outbox_->error(code::kBadSeq, "seq must increase", m.seq);
        return;
      }
      last_client_seq_ = m.seq;
    }
  }
  if (m.type == msg::kPing) {
    json payload = json::object();
    if (m.seq) payload["reply_to"] = *m.seq;
    outbox_->send(msg::kPong, payload);
  } else if (m.type == msg::kStartRun) {
    on_start_run(m);
  } else if (m.type == msg::kPause) {
    on_pause(m);
  } else if (m.type == msg::kResume) {
    on_resume(m);
  } else if (m.type == msg::kRefine) {
    on_refine(m);
  } else if (m.type == msg::kBranch) {
    on_branch(m);
  } else if (m.type == msg::kAdmit) {
    on_admit(m);
  } else {
    outbox_->error(code::kUnknownType, "unknown message type \"" + m.type + "\"", m.seq);
  }
}

namespace {

std::optional<std::string> string_field(const json& payload, const char* key) {
  const auto it = payload.find(key);
  if (it == payload.end() || !it->is_string()) return std::nullopt;
  return it->get<std::string>();
}

std::optional<std::size_t> index_field(const json& payload, const char* key) {
  const auto it = payload.find(key);
  if (it == payload.end() || !it->is_number_integer() || it->get<std::int64_t>() < 0) {
    return std::nullopt;
  }
  return it->get<std::size_t>();
}

}  // namespace

void Session::on_start_run(const Message& m) {
  const auto prompt = string_field(m.payload, "prompt");
  if (!prompt || prompt->empty()) {
    outbox_->error(code::kBadRequest, "start_run needs a non-empty \"prompt\"", m.seq);
    return;
  }
  EvolutionConfig config;
  try {
    config = config_from_json(m.payload.value("config", json::object()), deps_.defaults);
    config.embedder = deps_.defaults.embedder;
    config.validate();
  } catch (const Error& e) {
    outbox_->error(code::kBadRequest, e.what(), m.seq);
    return;
  }

  std::lock_guard lock(mutex_);
  if (state_ != SessionState::kIdle) {
    outbox_->error(code::kRunActive, "a run is already active", m.seq);
    return;
  }
  auto run = std::make_shared<ActiveRun>();
  run->run_id = new_run_id();
  run->make = [this, prompt = *prompt, config, id = run->run_id] {
    return RunContext(prompt, config, *deps_.mapping, embedder(), id);
  };
  active_ = run;
  state_ = SessionState::kRunning;
  outbox_->ack(m.type, m.seq, {{"run_id", run->run_id}, {"state", to_string(state_)}});
  cv_.notify_all();
}

void Session::on_pause(const Message& m) {
  std::lock_guard lock(mutex_);
  if (state_ == SessionState::kIdle) {
    outbox_->error(code::kNoRun, "no active run", m.seq);
  } else if (state_ == SessionState::kPaused) {
    outbox_->error(code::kInvalidState, "run is already paused", m.seq);
  } else {
    state_ = SessionState::kPaused;
    outbox_->ack(m.type, m.seq, {{"run_id", active_->run_id}, {"state", to_string(state_)}});
  }
}

void Session::on_resume(const Message& m) {
  std::lock_guard lock(mutex_);
  if (state_ == SessionState::kIdle) {
    outbox_->error(code::kNoRun, "no active run", m.seq);
  } else if (state_ == SessionState::kRunning) {
    outbox_->error(code::kInvalidState, "run is not paused", m.seq);
  } else {
    state_ = SessionState::kRunning;
    outbox_->ack(m.type, m.seq, {{"run_id", active_->run_id}, {"state", to_string(state_)}});
    cv_.notify_all();
  }
}

void Session::on_refine(const Message& m) {
  const auto prompt = string_field(m.payload, "prompt");
  std::lock_guard lock(mutex_);
  if (state_ == SessionState::kIdle) {
    outbox_->error(code::kNoRun, "no active run", m.seq);
    return;
  }
  if (state_ == SessionState::kRunning) {
    outbox_->error(code::kNotPaused, "refine requires a paused run", m.seq);
    return;
  }
  if (!prompt || prompt->empty()) {
    outbox_->error(code::kBadRequest, "refine needs a non-empty \"prompt\"", m.seq);
    return;
  }
  active_->pending_prompt = *prompt;
  outbox_->ack(m.type, m.seq, {{"run_id", active_->run_id}, {"prompt", *prompt}});
}

void Session::on_branch(const Message& m) {
  const auto generation = index_field(m.payload, "generation");
  const auto candidate = index_field(m.payload, "candidate");
  if (!generation || !candidate) {
    outbox_->error(code::kBadRequest, "branch needs integer \"generation\" and \"candidate\"",
                   m.seq);
    return;
  }
  std::lock_guard lock(mutex_);
  if (state_ == SessionState::kRunning) {
    outbox_->error(code::kNotPaused, "branch requires a paused or finished run", m.seq);
    return;
  }
  const RunHistory* parent = nullptr;
  if (state_ == SessionState::kPaused) {
    if (active_->snapshot) parent = &*active_->snapshot;
  } else if (last_finished_) {
    parent = &*last_finished_;
  }
  if (parent == nullptr) {
    outbox_->error(code::kNoRun, "no completed generation to branch from", m.seq);
    return;
  }
  try {
    branch_from(*parent, *generation, *candidate);
  } catch (const Error& e) {
    outbox_->error(code::kBadRequest, e.what(), m.seq);
    return;
  }

  auto run = std::make_shared<ActiveRun>();
  run->run_id = new_run_id();
  run->make = [this, parent = *parent, g = *generation, c = *candidate, id = run->run_id] {
    return RunContext::branch(parent, g, c, embedder(), id);
  };
  const std::string parent_id = parent->run_id;
  stop_active_locked();
  active_ = run;
  state_ = SessionState::kRunning;
  outbox_->ack(m.type, m.seq,
               {{"run_id", run->run_id}, {"parent_run_id", parent_id}, {"state", to_string(state_)}});
  cv_.notify_all();
}

void Session::on_admit(const Message& m) {
  const auto run_id = string_field(m.payload, "run_id");
  if (!run_id) {
    outbox_->error(code::kBadRequest, "admit needs a \"run_id\"", m.seq);
    return;
  }
  if (!deps_.ecosystem) {
    outbox_->error(code::kNoEcosystem, "this server has no ecosystem", m.seq);
    return;
  }
  std::optional<RunHistory> history;
  {
    std::lock_guard lock(mutex_);
    if (active_ && active_->run_id == *run_id) {
      outbox_->error(code::kRunActive, "run " + *run_id + " is still active", m.seq);
      return;
    }
    if (last_finished_ && last_finished_->run_id == *run_id) history = last_finished_;
  }
  try {
    if (!history) history = deps_.store->load(*run_id);
  } catch (const NotFound& e) {
    outbox_->error(code::kNotFound, e.what(), m.seq);
    return;
  } catch (const Error& e) {
    outbox_->error(code::kBadRequest, e.what(), m.seq);
    return;
  }
  if (history->records.empty()) {
    outbox_->error(code::kBadRequest, "run " + *run_id + " has no generations", m.seq);
    return;
  }
  const GenerationRecord* best = &history->records.front();
  for (const auto& r : history->records) {
    if (r.best_loss < best->best_loss) best = &r;
  }
  AdmitRequest request;
  request.params = best->best_params;
  request.owner = id_;
  if (auto n = index_field(m.payload, "n_agents")) request.n_agents = *n;
  try {
    request.prompt_embedding = embed_text(*embedder(), history->current_prompt());
  } catch (const Error& e) {
    outbox_->error(code::kBadRequest, e.what(), m.seq);
    return;
  }
  deps_.ecosystem->admit(std::move(request),
                         [outbox = outbox_, seq = m.seq, id = *run_id](const AdmitResult& r) {
                           if (r.lifeform_id) {
                             outbox->ack(msg::kAdmit, seq,
                                         {{"lifeform_id", *r.lifeform_id}, {"run_id", id}});
                           } else {
                             outbox->error(r.error_code, r.error_message, seq);
                           }
                         });
}

void Session::stop_active_locked() {
  if (!active_) return;
  active_->stopped = true;
  active_.reset();
  state_ = SessionState::kIdle;
}

bool Session::advance() {
  std::shared_ptr<ActiveRun> run;
  std::optional<std::string> refine;
  {
    std::lock_guard lock(mutex_);
    if (state_ != SessionState::kRunning || !active_) return false;
    run = active_;
    refine = std::exchange(run->pending_prompt, std::nullopt);
    ++in_flight_;
  }

  std::optional<GenerationOutcome> outcome;
  std::string failure;
  try {
    if (!run->context) {
      run->context.emplace(run->make());
      deps_.store->persist(run->context->history());
    }
    if (refine) run->context->refine_prompt(*refine, *deps_.mapping);
    outcome = run->context->run_generation();
    deps_.store->persist(run->context->history());
  } catch (const std::exception& e) {
    failure = e.what();
    if (run->context) {
      try {
        deps_.store->persist(run->context->history());
      } catch (const std::exception&) {
      }
    }
  }

  std::lock_guard lock(mutex_);
  --in_flight_;
  if (run->stopped) {
    // Retired by branch or close while this generation was computing; the
    // record is persisted but no longer streamed.
    cv_.notify_all();
    return true;
  }
  if (!outcome) {
    outbox_->send(msg::kRunFailed, {{"run_id", run->run_id}, {"message", failure}});
    if (active_ == run) {
      active_.reset();
      state_ = SessionState::kIdle;
      if (run->context) last_finished_ = run->context->history();
    }
    cv_.notify_all();
    return true;
  }
  run->snapshot = run->context->history();
  outbox_->send(msg::kGenerationUpdate, generation_update_payload(run->run_id, *outcome));
  if (run->context->finished()) {
    outbox_->send(msg::kRunFinished, {{"run_id", run->run_id},
                                      {"generations", run->context->history().records.size()},
                                      {"best_loss", outcome->record.best_so_far_loss}});
    if (active_ == run) {
      active_.reset();
      state_ = SessionState::kIdle;
      last_finished_ = *run->snapshot;
    }
  }
  cv_.notify_all();
  return true;
}

void Session::close() {
  std::lock_guard lock(mutex_);
  if (closed_) return;
  closed_ = true;
  stop_active_locked();
  cv_.notify_all();
}

void Session::join() {
  if (worker_.joinable() && worker_.get_id() != std::this_thread::get_id()) worker_.join();
}

void Session::worker_loop() {
  for (;;) {
    {
      std::unique_lock lock(mutex_);
      cv_.wait(lock, [&] { return closed_ || (state_ == SessionState::kRunning && active_); });
      if (closed_) break;
    }
    advance();
  }
  worker_exited_ = true;
}

SessionManager::SessionManager(SessionDeps deps, bool threaded)
    : deps_(std::move(deps)), threaded_(threaded) {}

SessionManager::~SessionManager() {
  std::vector<std::shared_ptr<Session>> all;
  {
    std::lock_guard lock(mutex_);
    for (auto& [id, s] : sessions_) all.push_back(s);
    sessions_.clear();
    all.insert(all.end(), retired_.begin(), retired_.end());
    retired_.clear();
  }
  for (auto& s : all) {
    s->close();
    s->join();
  }
}

std::shared_ptr<Session> SessionManager::create(std::shared_ptr<Outbox> outbox) {
  std::lock_guard lock(mutex_);
  std::string id;
  do {
    id = random_token();
  } while (sessions_.contains(id));
  auto s = std::make_shared<Session>(id, deps_, std::move(outbox), threaded_);
  sessions_.emplace(id, s);
  return s;
}

std::shared_ptr<Session> SessionManager::find(std::string_view id) const {
  std::lock_guard lock(mutex_);
  const auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

void SessionManager::close(std::string_view id) {
  std::shared_ptr<Session> s;
  {
    std::lock_guard lock(mutex_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) throw NotFound("no session \"" + std::string(id) + "\"");
    s = it->second;
    sessions_.erase(it);
    std::erase_if(retired_, [](const auto& r) {
      if (!r->worker_exited()) return false;
      r->join();
      return true;
    });
    retired_.push_back(s);
  }
  s->close();
}

std::size_t SessionManager::size() const {
  std::lock_guard lock(mutex_);
  return sessions_.size();
}

}  // namespace semswarm::service
