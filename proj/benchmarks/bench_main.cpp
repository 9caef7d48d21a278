#include <benchmark/benchmark.h>

#include <cmath>

#include "etcsim/engine.hpp"
#include "etcsim/geometry.hpp"
#include "etcsim/kde.hpp"
#include "etcsim/rng.hpp"
#include "fixtures.hpp"

using namespace etcsim;

static void BM_Destination(benchmark::State& state) {
  LonLat p{-20.0, 50.0};
  double bearing = 0.3;
  for (auto _ : state) {
    p = destination_point(p, 12.0, bearing);
    if (std::abs(p.lat) > 80) p.lat = 50.0;
    bearing = wrap_angle(bearing + 0.01);
    benchmark::DoNotOptimize(p);
  }
}
BENCHMARK(BM_Destination);

static void BM_ConditionalSample(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(11);
  Eigen::MatrixXd s(n, 5);
  for (int i = 0; i < n; ++i) {
    double x = standard_normal(rng);
    for (int j = 0; j < 5; ++j) {
      x = 0.7 * x + 0.5 * standard_normal(rng);
      s(i, j) = x;
    }
  }
  const KdeModel m = KdeModel::fit(s);
  const ConditionalKde c(m, {0, 1, 2, 3}, {4});
  Eigen::VectorXd g = s.row(0).head(4).transpose();
  for (auto _ : state) benchmark::DoNotOptimize(c.sample(g, rng));
  state.SetComplexityN(n);
}
BENCHMARK(BM_ConditionalSample)->RangeMultiplier(4)->Range(64, 16384)->Complexity(benchmark::oN);

static void BM_SimulateStorm(benchmark::State& state) {
  const Simulator& sim = testing::toy_simulator();
  std::uint64_t seed = 0;
  std::size_t points = 0;
  for (auto _ : state) {
    const auto s = sim.simulate_storm(seed++);
    points += s.track.size();
    benchmark::DoNotOptimize(s);
  }
  state.counters["storms/s"] = benchmark::Counter(static_cast<double>(state.iterations()), benchmark::Counter::kIsRate);
  state.counters["points/storm"] = static_cast<double>(points) / static_cast<double>(state.iterations());
}
BENCHMARK(BM_SimulateStorm)->Unit(benchmark::kMicrosecond);

static void BM_FitAll(benchmark::State& state) {
  const Catalog& c = testing::toy_catalog();
  for (auto _ : state) benchmark::DoNotOptimize(fit_all(c));
}
BENCHMARK(BM_FitAll)->Unit(benchmark::kMillisecond)->Iterations(3);

BENCHMARK_MAIN();
