#include <CLI11.hpp>
#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <thread>

#include "semswarm/errors.hpp"
#include "semswarm/evolution.hpp"
#include "semswarm/prompt2param.hpp"
#include "semswarm/run_log.hpp"
#include "semswarm/service/server.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitEmbed = 3;
constexpr int kExitOther = 1;

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

std::string env_endpoint() {
  const char* v = std::getenv("SEMSWARM_EMBED_ENDPOINT");
  return v == nullptr ? std::string{} : std::string(v);
}

bool is_embed_failure(std::exception_ptr p) {
  try {
    std::rethrow_exception(p);
  } catch (const semswarm::EmbedServiceError&) {
    return true;
  } catch (const semswarm::ProtocolError&) {
    return true;
  } catch (...) {
    return false;
  }
}

struct EvolveArgs {
  std::string prompt;
  std::size_t generations = 30;
  std::uint64_t seed = 0;
  std::string embedder = "oracle";
  std::string endpoint = env_endpoint();
  std::string out;
  std::size_t agents = 512;
  std::size_t steps = 240;
  std::size_t frames = 3;
  std::size_t workers = 1;
  bool quiet = false;
};

int run_evolve(const EvolveArgs& a) {
  using namespace semswarm;
  EvolutionConfig config;
  config.generations = a.generations;
  config.run_seed = a.seed;
  config.n_agents = a.agents;
  config.sim_steps = a.steps;
  config.frames_per_eval = a.frames;
  config.workers = a.workers;
  config.embedder.kind = a.embedder == "remote" ? EmbedderKind::kRemote : EmbedderKind::kOracle;
  config.embedder.endpoint = a.endpoint;

  std::unique_ptr<EmbeddingProvider> embedder;
  MappingModel mapping;
  try {
    config.validate();
    embedder = make_embedder(config.embedder);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  const std::string run_id = std::filesystem::path(a.out).stem().string();
  try {
    mapping = train_mapping(bundled_dataset(), *embedder);
    const RunHistory h = evolve(a.prompt, config, mapping, *embedder, [&](const GenerationOutcome& o) {
      if (a.quiet) return;
      std::fprintf(stderr, "gen %3zu  best %.6f  best-so-far %.6f  sigma %.4f%s\n",
                   o.record.generation, o.record.best_loss, o.record.best_so_far_loss,
                   o.record.sigma, o.record.noise_injected ? "  [noise]" : "");
    });
    RunHistory named = h;
    if (named.run_id.empty()) named.run_id = run_id;
    write_run_log(named, a.out);
    return kExitOk;
  } catch (const EvolutionAborted& e) {
    RunHistory partial = e.partial();
    if (partial.run_id.empty()) partial.run_id = run_id;
    write_run_log(partial, a.out);
    std::cerr << "run aborted after " << partial.records.size() << " generations: " << e.what()
              << "\n";
    return is_embed_failure(e.cause()) ? kExitEmbed : kExitOther;
  } catch (const EmbedServiceError& e) {
    std::cerr << "embedding service failure: " << e.what() << "\n";
    return kExitEmbed;
  } catch (const ProtocolError& e) {
    std::cerr << "embedding protocol failure: " << e.what() << "\n";
    return kExitEmbed;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const EmptyPrompt& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InvalidParameter& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
}

struct ServeArgs {
  std::string address = "127.0.0.1";
  unsigned short port = 8080;
  std::string store = "runs";
  std::string embedder;
  std::string endpoint = env_endpoint();
  std::size_t agents = 512;
  std::size_t steps = 240;
  std::size_t frames = 3;
  std::size_t generations = 30;
  std::size_t workers = 1;
  std::size_t capacity = semswarm::kDefaultEcosystemCapacity;
  std::size_t lifeform_agents = 500;
  double ecosystem_rate = 30.0;
  std::size_t io_threads = 2;
};

int run_serve(const ServeArgs& a) {
  using namespace semswarm;
  namespace svc = semswarm::service;

  EvolutionConfig defaults;
  defaults.n_agents = a.agents;
  defaults.sim_steps = a.steps;
  defaults.frames_per_eval = a.frames;
  defaults.generations = a.generations;
  defaults.workers = a.workers;
  const std::string kind = a.embedder.empty() ? (a.endpoint.empty() ? "oracle" : "remote") : a.embedder;
  defaults.embedder.kind = kind == "remote" ? EmbedderKind::kRemote : EmbedderKind::kOracle;
  defaults.embedder.endpoint = a.endpoint;

  std::shared_ptr<EmbeddingProvider> embedder;
  svc::SessionDeps deps;
  try {
    defaults.validate();
    embedder = make_embedder(defaults.embedder);
    deps.mapping = std::make_shared<MappingModel>(train_mapping(bundled_dataset(), *embedder));
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const EmbedServiceError& e) {
    std::cerr << "embedding service failure: " << e.what() << "\n";
    return kExitEmbed;
  } catch (const ProtocolError& e) {
    std::cerr << "embedding protocol failure: " << e.what() << "\n";
    return kExitEmbed;
  }
  deps.embedder_factory = [embedder](const EmbedderSpec&) { return embedder; };
  deps.store = std::make_shared<svc::RunStore>(a.store);
  svc::EcosystemLoop::Options eco;
  eco.world.capacity = a.capacity;
  eco.agents_per_lifeform = a.lifeform_agents;
  eco.max_steps_per_second = a.ecosystem_rate;
  deps.ecosystem = std::make_shared<svc::EcosystemLoop>(eco);
  deps.defaults = defaults;

  svc::Server server({a.address, a.port, a.io_threads}, deps);
  const unsigned short port = server.start();
  std::cerr << "listening on " << a.address << ":" << port << " (store " << a.store << ", embedder "
            << embedder->model_id() << ")\n";
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
  deps.ecosystem->stop();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Language-steered swarm evolution"};
  app.require_subcommand(1);

  EvolveArgs ev;
  auto* evolve = app.add_subcommand("evolve", "Run one headless evolution and write a run log");
  evolve->add_option("--prompt", ev.prompt, "Text prompt")->required();
  evolve->add_option("--generations", ev.generations, "Generations to run");
  evolve->add_option("--seed", ev.seed, "Run seed");
  evolve->add_option("--embedder", ev.embedder, "Embedding provider")
      ->check(CLI::IsMember({"oracle", "remote"}));
  evolve->add_option("--endpoint", ev.endpoint,
                     "Embedding service URL (default $SEMSWARM_EMBED_ENDPOINT)");
  evolve->add_option("--out", ev.out, "Run log path (.jsonl)")->required();
  evolve->add_option("--agents", ev.agents, "Agents per simulation");
  evolve->add_option("--steps", ev.steps, "Simulation steps per evaluation");
  evolve->add_option("--frames", ev.frames, "Frames embedded per evaluation");
  evolve->add_option("--workers", ev.workers, "Parallel candidate evaluations (0 = all cores)");
  evolve->add_flag("--quiet", ev.quiet, "No per-generation progress");

  ServeArgs sv;
  auto* serve = app.add_subcommand("serve", "Run the WebSocket/HTTP service");
  serve->add_option("--address", sv.address, "Bind address");
  serve->add_option("--port", sv.port, "Port (0 = ephemeral)");
  serve->add_option("--store", sv.store, "Run store directory");
  serve->add_option("--embedder", sv.embedder, "Embedding provider")
      ->check(CLI::IsMember({"oracle", "remote"}));
  serve->add_option("--endpoint", sv.endpoint,
                    "Embedding service URL (default $SEMSWARM_EMBED_ENDPOINT)");
  serve->add_option("--agents", sv.agents, "Default agents per simulation");
  serve->add_option("--steps", sv.steps, "Default simulation steps");
  serve->add_option("--frames", sv.frames, "Default frames per evaluation");
  serve->add_option("--generations", sv.generations, "Default generations per run");
  serve->add_option("--workers", sv.workers, "Parallel candidate evaluations per run");
  serve->add_option("--capacity", sv.capacity, "Ecosystem agent capacity");
  serve->add_option("--lifeform-agents", sv.lifeform_agents, "Agents per admitted lifeform");
  serve->add_option("--ecosystem-rate", sv.ecosystem_rate, "Ecosystem steps per second (0 = unthrottled)");
  serve->add_option("--io-threads", sv.io_threads, "Network threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }
  if (*evolve) return run_evolve(ev);
  return run_serve(sv);
}
