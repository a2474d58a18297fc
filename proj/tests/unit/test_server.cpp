#include <gtest/gtest.h>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <chrono>

#include "semswarm/service/server.hpp"
#include "test_support.hpp"

// After Eigen: resolv.h, pulled in by httplib, defines a _res macro.
#include <httplib.h>

using namespace semswarm;
using namespace semswarm::service;
using nlohmann::json;
using semswarm::testing::TempDir;

namespace {

namespace beast = boost::beast;
namespace net = boost::asio;
using tcp = net::ip::tcp;

class WsClient {
 public:
  explicit WsClient(unsigned short port) : ws_(ioc_) {
    tcp::resolver resolver(ioc_);
    net::connect(ws_.next_layer(), resolver.resolve("127.0.0.1", std::to_string(port)));
    ws_.handshake("127.0.0.1", "/v1/ws");
  }

  ~WsClient() {
    beast::error_code ec;
    ws_.close(beast::websocket::close_code::normal, ec);
  }

  void send(std::string_view type, std::int64_t seq, json payload = json::object()) {
    ws_.write(net::buffer(encode_message({std::string(type), std::move(payload), seq})));
  }

  json read() {
    beast::flat_buffer buf;
    ws_.read(buf);
    return json::parse(beast::buffers_to_string(buf.data()));
  }

  /// Reads until a message of `type` arrives, skipping others.
  json read_until(std::string_view type) {
    for (;;) {
      auto m = read();
      if (m["type"] == type) return m;
    }
  }

 private:
  net::io_context ioc_;
  beast::websocket::stream<tcp::socket> ws_;
};

struct LiveServer {
  TempDir dir{"server"};
  std::shared_ptr<EcosystemLoop> ecosystem;
  std::unique_ptr<Server> server;
  unsigned short port = 0;

  explicit LiveServer(EvolutionConfig defaults) {
    SessionDeps deps;
    deps.mapping = std::make_shared<MappingModel>(semswarm::testing::oracle_mapping());
    deps.embedder_factory = default_embedder_factory();
    deps.store = std::make_shared<RunStore>(dir.path());
    EcosystemLoop::Options opts;
    opts.max_steps_per_second = 30.0;
    ecosystem = std::make_shared<EcosystemLoop>(opts);
    deps.ecosystem = ecosystem;
    deps.defaults = defaults;
    ServerOptions so;
    so.port = 0;
    server = std::make_unique<Server>(so, deps);
    port = server->start();
  }
};

}  // namespace

TEST(Server, HttpRoutes) {
  LiveServer live(semswarm::testing::tiny_config(2));
  httplib::Client http("127.0.0.1", live.port);

  auto res = http.Get("/healthz");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(json::parse(res->body)["status"], "ok");

  res = http.Get("/v1/ecosystem/state");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(json::parse(res->body)["agent_count"], 0);

  res = http.Get("/v1/runs/run-missing");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 404);
  res = http.Get("/nowhere");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 404);
  res = http.Post("/healthz", "", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 405);

  WsClient ws(live.port);
  ws.send(msg::kStartRun, 1, {{"prompt", "cluster"}});
  const auto ack = ws.read_until(msg::kAck);
  const std::string run_id = ack["payload"]["run_id"];
  const auto done = ws.read_until(msg::kRunFinished);
  EXPECT_EQ(done["payload"]["run_id"], run_id);

  res = http.Get(("/v1/runs/" + run_id).c_str());
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  const auto body = json::parse(res->body);
  EXPECT_EQ(body["header"]["run_id"], run_id);
  EXPECT_EQ(body["records"].size(), 2u);

  ws.send(msg::kAdmit, 2, {{"run_id", run_id}, {"n_agents", 30}});
  const auto admitted = ws.read_until(msg::kAck);
  EXPECT_EQ(admitted["payload"]["for"], "admit");
  res = http.Get("/v1/ecosystem/state");
  ASSERT_TRUE(res);
  EXPECT_EQ(json::parse(res->body)["agent_count"], 30);
}

TEST(Server, PingAnsweredQuicklyDuringRun) {
  auto cfg = semswarm::testing::tiny_config(200);
  // Each generation takes well over 100 ms, so pings land mid-computation.
  cfg.n_agents = 300;
  cfg.sim_steps = 300;
  cfg.frames_per_eval = 2;
  cfg.image_size = 64;
  LiveServer live(cfg);
  WsClient ws(live.port);
  ws.send(msg::kStartRun, 1, {{"prompt", "cluster"}});
  ws.read_until(msg::kAck);
  ws.read_until(msg::kGenerationUpdate);

  std::vector<double> latencies;
  for (std::int64_t seq = 2; seq < 12; ++seq) {
    const auto t0 = std::chrono::steady_clock::now();
    std::this_thread::sleep_for(std::chrono::milliseconds(37));
    ws.send(msg::kPing, seq);
    const auto pong = ws.read_until(msg::kPong);
    latencies.push_back(std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - t0).count());
    EXPECT_EQ(pong["payload"]["reply_to"], seq);
  }
  EXPECT_LT(*std::max_element(latencies.begin(), latencies.end()), 100.0) << "ping latency in ms";
}

TEST(Server, DisconnectClosesSession) {
  LiveServer live(semswarm::testing::tiny_config(1000));
  {
    WsClient ws(live.port);
    ws.send(msg::kStartRun, 1, {{"prompt", "cluster"}});
    ws.read_until(msg::kGenerationUpdate);
    EXPECT_EQ(live.server->sessions().size(), 1u);
  }
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(10);
  while (live.server->sessions().size() > 0 && std::chrono::steady_clock::now() < deadline) {
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  EXPECT_EQ(live.server->sessions().size(), 0u);
}
