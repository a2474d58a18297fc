#include <benchmark/benchmark.h>

#include "semswarm/spatial_grid.hpp"
#include "semswarm/swarm.hpp"

namespace {

void BM_StepWorld(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  semswarm::SwarmParams p;
  auto world = semswarm::init_world(p, n, 7);
  for (auto _ : state) {
    semswarm::step_world(world, p);
    benchmark::DoNotOptimize(world.agents.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_StepWorld)->Arg(512)->Arg(2048)->Arg(10000);

void BM_RunSimulation(benchmark::State& state) {
  semswarm::SwarmParams p;
  for (auto _ : state) {
    auto traj = semswarm::run_simulation(p, 512, 240, 3);
    benchmark::DoNotOptimize(traj.frames.back().data());
  }
}
BENCHMARK(BM_RunSimulation)->Unit(benchmark::kMillisecond);

void BM_GridRebuild(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto world = semswarm::init_world({}, n, 11);
  std::vector<semswarm::Vec2> pos;
  for (const auto& a : world.agents) pos.push_back(a.position);
  semswarm::SpatialGrid grid;
  for (auto _ : state) {
    grid.rebuild(pos, 0.1);
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_GridRebuild)->Arg(10000);

}  // namespace
