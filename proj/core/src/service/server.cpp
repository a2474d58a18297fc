#include "semswarm/service/server.hpp"

#include <boost/asio/dispatch.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <condition_variable>
#include <deque>
#include <thread>
#include <vector>

#include "semswarm/errors.hpp"
#include "semswarm/run_log.hpp"

namespace semswarm::service {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using nlohmann::json;

namespace {

struct Shared {
  SessionDeps deps;
  SessionManager sessions;

  Shared(SessionDeps d) : deps(d), sessions(std::move(d), true) {}
};

http::response<http::string_body> json_response(const http::request<http::string_body>& req,
                                                 http::status status, const json& body) {
  http::response<http::string_body> res{status, req.version()};
  res.set(http::field::content_type, "application/json");
  res.keep_alive(req.keep_alive());
  res.body() = body.dump();
  res.prepare_payload();
  return res;
}

http::response<http::string_body> route(Shared& shared,
                                        const http::request<http::string_body>& req) {
  const std::string target(req.target());
  if (req.method() != http::verb::get) {
    return json_response(req, http::status::method_not_allowed, {{"error", "method not allowed"}});
  }
  if (target == "/healthz") {
    return json_response(req, http::status::ok, {{"status", "ok"}});
  }
  if (target == "/v1/ecosystem/state") {
    if (!shared.deps.ecosystem) {
      return json_response(req, http::status::not_found, {{"error", "no ecosystem"}});
    }
    return json_response(req, http::status::ok, shared.deps.ecosystem->state());
  }
  constexpr std::string_view kRuns = "/v1/runs/";
  if (target.starts_with(kRuns)) {
    const std::string id = target.substr(kRuns.size());
    try {
      const RunHistory h = shared.deps.store->load(id);
      json records = json::array();
      for (const auto& r : h.records) records.push_back(record_to_json(r));
      return json_response(req, http::status::ok,
                           {{"header", header_to_json(h)}, {"records", records}});
    } catch (const NotFound& e) {
      return json_response(req, http::status::not_found, {{"error", e.what()}});
    } catch (const Error& e) {
      return json_response(req, http::status::internal_server_error, {{"error", e.what()}});
    }
  }
  return json_response(req, http::status::not_found, {{"error", "no route"}});
}

class WsConnection : public std::enable_shared_from_this<WsConnection> {
 public:
  WsConnection(tcp::socket&& socket, Shared& shared) : ws_(std::move(socket)), shared_(shared) {}

  void run(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, beast::bind_front_handler(&WsConnection::on_accept, shared_from_this()));
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return;
    std::weak_ptr<WsConnection> weak = shared_from_this();
    auto outbox = std::make_shared<Outbox>([weak](std::string text) {
      if (auto self = weak.lock()) self->enqueue(std::move(text));
    });
    session_ = shared_.sessions.create(outbox);
    do_read();
  }

  void do_read() {
    ws_.async_read(buffer_, beast::bind_front_handler(&WsConnection::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) {
      finish();
      return;
    }
    const std::string text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    session_->handle_text(text);
    do_read();
  }

  void enqueue(std::string text) {
    net::post(ws_.get_executor(), [self = shared_from_this(), text = std::move(text)]() mutable {
      self->outgoing_.push_back(std::move(text));
      if (self->outgoing_.size() == 1) self->do_write();
    });
  }

  void do_write() {
    ws_.text(true);
    ws_.async_write(net::buffer(outgoing_.front()),
                    beast::bind_front_handler(&WsConnection::on_write, shared_from_this()));
  }

  void on_write(beast::error_code ec, std::size_t) {
    if (ec) {
      finish();
      return;
    }
    outgoing_.pop_front();
    if (!outgoing_.empty()) do_write();
  }

  void finish() {
    if (!session_) return;
    try {
      shared_.sessions.close(session_->id());
    } catch (const NotFound&) {
    }
    session_.reset();
  }

  websocket::stream<beast::tcp_stream> ws_;
  Shared& shared_;
  beast::flat_buffer buffer_;
  std::deque<std::string> outgoing_;
  std::shared_ptr<Session> session_;
};

class HttpConnection : public std::enable_shared_from_this<HttpConnection> {
 public:
  HttpConnection(tcp::socket&& socket, Shared& shared) : stream_(std::move(socket)), shared_(shared) {}

  void run() {
    net::dispatch(stream_.get_executor(),
                  beast::bind_front_handler(&HttpConnection::do_read, shared_from_this()));
  }

 private:
  void do_read() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_,
                     beast::bind_front_handler(&HttpConnection::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) {
      stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
      return;
    }
    if (websocket::is_upgrade(req_)) {
      if (req_.target() == "/v1/ws") {
        stream_.expires_never();
        std::make_shared<WsConnection>(stream_.release_socket(), shared_)->run(std::move(req_));
        return;
      }
      res_ = json_response(req_, http::status::not_found, {{"error", "no websocket route"}});
    } else {
      res_ = route(shared_, req_);
    }
    http::async_write(stream_, res_,
                      beast::bind_front_handler(&HttpConnection::on_write, shared_from_this()));
  }

  void on_write(beast::error_code ec, std::size_t) {
    if (ec || !res_.keep_alive()) {
      stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
      return;
    }
    do_read();
  }

  beast::tcp_stream stream_;
  Shared& shared_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
  http::response<http::string_body> res_;
};

}  // namespace

struct Server::Impl {
  ServerOptions options;
  Shared shared;
  net::io_context ioc;
  tcp::acceptor acceptor{ioc};
  std::vector<std::thread> threads;
  std::mutex mutex;
  std::condition_variable cv;
  bool stopped = false;

  Impl(ServerOptions o, SessionDeps d)
      : options(std::move(o)), shared(std::move(d)), ioc(static_cast<int>(options.io_threads)) {}

  void do_accept() {
    acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) {
        if (ec == net::error::operation_aborted) return;
      } else {
        std::make_shared<HttpConnection>(std::move(socket), shared)->run();
      }
      do_accept();
    });
  }
};

Server::Server(ServerOptions options, SessionDeps deps)
    : impl_(std::make_unique<Impl>(std::move(options), std::move(deps))) {}

Server::~Server() { stop(); }

unsigned short Server::start() {
  auto& i = *impl_;
  const tcp::endpoint endpoint{net::ip::make_address(i.options.address), i.options.port};
  i.acceptor.open(endpoint.protocol());
  i.acceptor.set_option(net::socket_base::reuse_address(true));
  i.acceptor.bind(endpoint);
  i.acceptor.listen(net::socket_base::max_listen_connections);
  i.do_accept();
  const std::size_t n = std::max<std::size_t>(1, i.options.io_threads);
  for (std::size_t t = 0; t < n; ++t) i.threads.emplace_back([&i] { i.ioc.run(); });
  return i.acceptor.local_endpoint().port();
}

void Server::stop() {
  auto& i = *impl_;
  {
    std::lock_guard lock(i.mutex);
    if (i.stopped) return;
    i.stopped = true;
  }
  i.cv.notify_all();
  net::post(i.ioc, [&i] {
    beast::error_code ec;
    i.acceptor.close(ec);
  });
  i.ioc.stop();
  for (auto& t : i.threads) {
    if (t.joinable()) t.join();
  }
}

void Server::wait() {
  auto& i = *impl_;
  std::unique_lock lock(i.mutex);
  i.cv.wait(lock, [&] { return i.stopped; });
}

SessionManager& Server::sessions() { return impl_->shared.sessions; }

}  // namespace semswarm::service
