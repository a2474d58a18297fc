#include <benchmark/benchmark.h>

#include "semswarm/cmaes.hpp"
#include "semswarm/population_analysis.hpp"

namespace {

void BM_AskTell(benchmark::State& state) {
  semswarm::CmaConfig cfg;
  cfg.dimension = static_cast<std::size_t>(state.range(0));
  const Eigen::VectorXd start = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(cfg.dimension), 0.5);
  auto cma = semswarm::cma_init_vector(start, cfg);
  std::vector<double> losses(cfg.population_size);
  for (auto _ : state) {
    const auto points = semswarm::sample_population(cma);
    for (std::size_t k = 0; k < points.size(); ++k) losses[k] = points[k].squaredNorm();
    semswarm::cma_update(cma, points, losses);
  }
}
BENCHMARK(BM_AskTell)->Arg(6)->Arg(10);

void BM_Pca(benchmark::State& state) {
  semswarm::Rng rng(3);
  std::vector<semswarm::Row> rows(200, semswarm::Row(6));
  for (auto& r : rows) {
    for (auto& x : r) x = rng.normal();
  }
  for (auto _ : state) benchmark::DoNotOptimize(semswarm::pca(rows, 6));
}
BENCHMARK(BM_Pca);

}  // namespace
