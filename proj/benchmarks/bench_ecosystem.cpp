#include <benchmark/benchmark.h>

#include "semswarm/ecosystem.hpp"

namespace {

semswarm::EcosystemWorld make_world(std::size_t species, std::size_t per_species) {
  semswarm::EcosystemWorld world({.capacity = 50'000, .seed = 5});
  for (std::size_t s = 0; s < species; ++s) {
    semswarm::SwarmParams p;
    p.neighbor_radius = 0.04 + 0.01 * static_cast<double>(s % 3);
    p.noise_sigma = 0.002;
    semswarm::admit_lifeform(world, p, semswarm::Embedding::basis(s % 3), "bench", per_species);
  }
  return world;
}

void BM_EcosystemStep(benchmark::State& state) {
  auto world = make_world(10, static_cast<std::size_t>(state.range(0)) / 10);
  for (auto _ : state) semswarm::ecosystem_step(world);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EcosystemStep)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_ApplyMetaRules(benchmark::State& state) {
  auto world = make_world(12, 10);
  const auto rules = semswarm::extract_meta_rules(semswarm::lifeform_traits(world), 2);
  for (auto _ : state) semswarm::apply_meta_rules(world, rules);
}
BENCHMARK(BM_ApplyMetaRules);

}  // namespace
