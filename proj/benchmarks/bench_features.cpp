#include <benchmark/benchmark.h>

#include <random>

#include "vocalfit/acoustics.hpp"
#include "vocalfit/features.hpp"
#include "vocalfit/metrics.hpp"
#include "vocalfit/tract.hpp"

namespace {

using namespace vocalfit;

const std::vector<double>& vowel() {
  static const std::vector<double> x =
      synthesize_vowel(params_to_area(neutral_params(), 1.0, 1.0), 120.0, 0.5, 44100.0);
  return x;
}

void BM_LogMel(benchmark::State& state) {
  const bool hf = state.range(0) != 0;
  for (auto _ : state) benchmark::DoNotOptimize(log_mel(vowel(), 44100.0, hf));
}
BENCHMARK(BM_LogMel)->Arg(0)->Arg(1);

void BM_Mfcc(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(mfcc(vowel(), 44100.0, n, true));
}
BENCHMARK(BM_Mfcc)->Arg(12)->Arg(22);

void BM_ApplyCmvn(benchmark::State& state) {
  const FeatureMatrix fm = mfcc(vowel(), 44100.0, 22, false);
  const std::vector<FeatureMatrix> corpus{fm, fm};
  const CmvnStats stats = compute_cmvn_stats(corpus);
  for (auto _ : state) benchmark::DoNotOptimize(apply_cmvn(fm, stats));
}
BENCHMARK(BM_ApplyCmvn);

void BM_Distance(benchmark::State& state) {
  const auto metric = static_cast<Metric>(state.range(0));
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  std::vector<double> a(26), b(26);
  for (auto& x : a) x = n(rng);
  for (auto& x : b) x = n(rng);
  for (auto _ : state) benchmark::DoNotOptimize(distance(a, b, metric));
  state.SetLabel(std::string(to_string(metric)));
}
BENCHMARK(BM_Distance)->DenseRange(0, 3);

}  // namespace
