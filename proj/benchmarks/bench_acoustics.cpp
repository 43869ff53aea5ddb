#include <benchmark/benchmark.h>

#include "vocalfit/acoustics.hpp"
#include "vocalfit/pipeline.hpp"
#include "vocalfit/tract.hpp"

namespace {

using namespace vocalfit;

AreaFunction neutral_area() { return params_to_area(neutral_params(), 1.0, 1.0); }

void BM_TransferFunction(benchmark::State& state) {
  const AreaFunction area = neutral_area();
  AcousticOptions o;
  o.df_hz = static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(transfer_function(area, o));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(o.f_max_hz / o.df_hz));
}
BENCHMARK(BM_TransferFunction)->Arg(20)->Arg(5)->Arg(1);

void BM_PickFormants(benchmark::State& state) {
  const TransferFunction tf = transfer_function(neutral_area());
  for (auto _ : state) benchmark::DoNotOptimize(pick_formants(tf));
}
BENCHMARK(BM_PickFormants);

void BM_Synthesize(benchmark::State& state) {
  const AreaFunction area = neutral_area();
  for (auto _ : state) benchmark::DoNotOptimize(synthesize_vowel(area, 120.0, 0.5, 44100.0));
}
BENCHMARK(BM_Synthesize)->Unit(benchmark::kMillisecond);

void BM_ProcessCandidate(benchmark::State& state) {
  CampaignConfig cfg;
  const auto shapes = sample_run(Model::Adult, 0, 64, 1, cfg.tract);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(process_candidate(shapes[i++ % shapes.size()], cfg));
  }
}
BENCHMARK(BM_ProcessCandidate)->Unit(benchmark::kMillisecond);

}  // namespace
