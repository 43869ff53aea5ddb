#include <benchmark/benchmark.h>

#include <random>

#include "vocalfit/surface.hpp"

namespace {

using namespace vocalfit;

std::vector<SurfaceSample> samples(std::size_t n) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z(0.0, 1.2);
  std::uniform_real_distribution<double> e(0.0, 1.0);
  std::vector<SurfaceSample> s(n);
  for (auto& x : s) x = {z(rng), z(rng), e(rng)};
  return s;
}

void BM_BuildSurface(benchmark::State& state) {
  const auto s = samples(static_cast<std::size_t>(state.range(0)));
  const SurfaceDescriptor d{"mfcc12", "mse", "a", "adult"};
  for (auto _ : state) benchmark::DoNotOptimize(build_surface(s, d, {}));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BuildSurface)->Arg(500)->Arg(8000)->Unit(benchmark::kMillisecond);

}  // namespace
