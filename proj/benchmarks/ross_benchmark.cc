// Copyright 2026 The rosskit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "rosskit/attacks.h"
#include "rosskit/basescores.h"
#include "rosskit/numerics.h"
#include "rosskit/refmodel.h"
#include "rosskit/ross.h"

namespace rosskit {
namespace {

const std::size_t kDims[] = {2, 32, 32, 3};

Vector RandomVector(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(n);
  for (double& x : v) x = normal(rng);
  return v;
}

void BM_Median(benchmark::State& state) {
  const Vector v = RandomVector(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(Median(v));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Median)->Arg(25)->Arg(1000)->Arg(100000);

void BM_Mad(benchmark::State& state) {
  const Vector v = RandomVector(static_cast<std::size_t>(state.range(0)), 2);
  for (auto _ : state) benchmark::DoNotOptimize(Mad(v));
}
BENCHMARK(BM_Mad)->Arg(25)->Arg(1000);

void BM_Auroc(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Vector id = RandomVector(n, 3);
  const Vector ood = RandomVector(n, 4);
  for (auto _ : state) benchmark::DoNotOptimize(Auroc(id, ood));
}
BENCHMARK(BM_Auroc)->Arg(1000)->Arg(100000);

void BM_ScoreStack(benchmark::State& state) {
  const RefModel model = RefModel::RandomInit(kDims, 5);
  const Scorer scorer = Scorer::MakeGen();
  RossConfig cfg = DefaultRossConfig();
  cfg.n_samples = static_cast<int>(state.range(0));
  const Vector x = RandomVector(2, 6);
  const BaseScoreFn base = [&](std::span<const double> p) {
    return ScoreInput(model, scorer, p);
  };
  std::uint64_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(ComputeScoreStack(x, base, cfg, i++));
  }
}
BENCHMARK(BM_ScoreStack)->Arg(5)->Arg(25)->Arg(50);

void BM_ScoreStacksBatch(benchmark::State& state) {
  const RefModel model = RefModel::RandomInit(kDims, 7);
  const Scorer scorer = Scorer::MakeGen();
  std::vector<Vector> inputs;
  for (std::uint64_t s = 0; s < 1000; ++s) inputs.push_back(RandomVector(2, s));
  const BaseScoreFn base = [&](std::span<const double> p) {
    return ScoreInput(model, scorer, p);
  };
  const int jobs = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        ComputeScoreStacks(inputs, base, DefaultRossConfig(), jobs));
  }
  state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_ScoreStacksBatch)->Arg(1)->Arg(4)->UseRealTime();

void BM_Pgd(benchmark::State& state) {
  const RefModel model = RefModel::RandomInit(kDims, 8);
  const Scorer scorer = Scorer::MakeGen();
  const Vector x = RandomVector(2, 9);
  const AttackConfig cfg = AttackConfig::Make(
      Direction::kMin, 0.1, static_cast<int>(state.range(0)));
  const ScoreWithGradFn grad = [&](std::span<const double> p) {
    return ScoreInputGradient(model, scorer, p);
  };
  for (auto _ : state) benchmark::DoNotOptimize(Pgd(x, grad, cfg));
}
BENCHMARK(BM_Pgd)->Arg(10)->Arg(40);

}  // namespace
}  // namespace rosskit

BENCHMARK_MAIN();
