#include <benchmark/benchmark.h>

#include "semswarm/render.hpp"
#include "semswarm/semantic.hpp"

namespace {

void BM_Rasterize(benchmark::State& state) {
  const auto world = semswarm::init_world({}, 512, 9);
  for (auto _ : state) {
    auto img = semswarm::rasterize_frame(world.agents, 224);
    benchmark::DoNotOptimize(img.pixels.data());
  }
}
BENCHMARK(BM_Rasterize);

void BM_RenderWithTrail(benchmark::State& state) {
  const auto traj = semswarm::run_simulation({}, 512, 40, 9);
  for (auto _ : state) {
    auto img = semswarm::render_with_trail(traj, 40);
    benchmark::DoNotOptimize(img.pixels.data());
  }
}
BENCHMARK(BM_RenderWithTrail);

void BM_EncodePng(benchmark::State& state) {
  const auto world = semswarm::init_world({}, 512, 9);
  const auto img = semswarm::rasterize_frame(world.agents, 224);
  for (auto _ : state) benchmark::DoNotOptimize(semswarm::encode_png(img));
}
BENCHMARK(BM_EncodePng);

void BM_OracleEmbed(benchmark::State& state) {
  const auto world = semswarm::init_world({}, 512, 9);
  for (auto _ : state) benchmark::DoNotOptimize(semswarm::oracle::embed_image(world.agents, 0.01));
}
BENCHMARK(BM_OracleEmbed);

}  // namespace
