#include <benchmark/benchmark.h>

#include <random>

#include "playseg/segmenter.hpp"
#include "playseg/synthgym.hpp"

using namespace playseg;

namespace {

ScoreMatrix random_matrix(int T, Band band) {
  std::mt19937_64 rng(static_cast<std::uint64_t>(T));
  std::uniform_real_distribution<double> u(0.01, 0.99);
  ScoreMatrix m(T, band);
  for (int i = 0; i < T; ++i) {
    for (int j = i; j < T; ++j) {
      if (m.in_band(i, j)) m.set(i, j, u(rng));
    }
  }
  return m;
}

void BM_DpFullBand(benchmark::State& state) {
  const int T = static_cast<int>(state.range(0));
  const ScoreMatrix m = random_matrix(T, {1, T});
  std::int64_t ops = 0;
  for (auto _ : state) {
    const auto r = dp_segment(m);
    ops = r.inner_updates;
    benchmark::DoNotOptimize(r.log_likelihood);
  }
  state.counters["inner_updates"] = static_cast<double>(ops);
  state.SetComplexityN(T);
}
BENCHMARK(BM_DpFullBand)->RangeMultiplier(2)->Range(25, 200)->Complexity(benchmark::oNCubed);

void BM_DpBand(benchmark::State& state) {
  const int T = static_cast<int>(state.range(0));
  const ScoreMatrix m = random_matrix(T, {2, 24});
  for (auto _ : state) benchmark::DoNotOptimize(dp_segment(m).log_likelihood);
  state.SetComplexityN(T);
}
BENCHMARK(BM_DpBand)->RangeMultiplier(2)->Range(25, 400)->Complexity();

void BM_BuildScoreMatrix(benchmark::State& state) {
  const int T = static_cast<int>(state.range(0));
  const WindowProbability p = [](int a, int b) { return 1.0 / (2.0 + a + b); };
  for (auto _ : state) benchmark::DoNotOptimize(build_score_matrix(p, T, {1, T}).evaluations);
  state.counters["evaluations"] = static_cast<double>(band_pair_count(T, {1, T}));
}
BENCHMARK(BM_BuildScoreMatrix)->RangeMultiplier(2)->Range(25, 200);

void BM_ScoreMatrixWithScorer(benchmark::State& state) {
  const int T = static_cast<int>(state.range(0));
  const FeatureSchema schema;
  const ScorerModel model(schema, Standardizer::identity(schema.segment_dim()),
                          Mlp(schema.segment_dim(), 64, kScorerOutputs, 1));
  gym::PlayConfig play;
  play.num_tasks = 20;
  const PlayRecord r = gym::generate_play_trajectory(1, play);
  const int len = std::min(T, r.trajectory->length());
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_score_matrix(model, *r.trajectory, 0, len, {2, 24}).evaluations);
  }
  state.counters["evaluations"] = static_cast<double>(band_pair_count(len, {2, 24}));
}
BENCHMARK(BM_ScoreMatrixWithScorer)->Arg(24)->Arg(48)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
