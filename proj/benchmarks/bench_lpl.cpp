// Copyright 2026 The LPL Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <benchmark/benchmark.h>

#include <numeric>

#include "lpl/dataset.hpp"
#include "lpl/eval.hpp"
#include "lpl/hallucination.hpp"
#include "lpl/prototype.hpp"
#include "lpl/sof.hpp"

using namespace lpl;

namespace {

const SplitDataset& bench_data() {
  static const SplitDataset ds = generate_synthetic(SynthConfig{});
  return ds;
}

Matrix filled(std::size_t rows, std::size_t cols, RngStream& rng) {
  Matrix m(rows, cols);
  for (double& x : m.data()) x = rng.normal();
  return m;
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  RngStream rng(1);
  const Matrix a = filled(n, n, rng), b = filled(n, n, rng);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(32)->Arg(64)->Arg(128);

void BM_SampleEpisode(benchmark::State& state) {
  const TrainingView view(bench_data());
  RngStream rng(2);
  for (auto _ : state) benchmark::DoNotOptimize(sample_episode(view, 20, 4, rng));
}
BENCHMARK(BM_SampleEpisode);

void BM_Hallucinate(benchmark::State& state) {
  RngStream rng(3);
  const Episode ep = sample_episode(bench_data(), 20, 4, rng);
  HalluConfig cfg;
  cfg.n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(hallucinate(ep, cfg, rng));
}
BENCHMARK(BM_Hallucinate)->Arg(1)->Arg(4)->Arg(19);

void BM_PlaceLoss(benchmark::State& state) {
  RngStream rng(4);
  const SplitDataset& ds = bench_data();
  const Episode ep = sample_episode(ds, 20, 4, rng);
  const HallucinatedEpisode hep = hallucinate(ep, HalluConfig{}, rng);
  const PrototypeModel model = init_prototype_model(ds.attribute_dim(), ds.feature_dim(), TrainConfig{});
  for (auto _ : state) benchmark::DoNotOptimize(place_loss(model.net, hep, 10.0));
}
BENCHMARK(BM_PlaceLoss);

void BM_SofGradients(benchmark::State& state) {
  RngStream rng(5);
  const SplitDataset& ds = bench_data();
  const auto batch = static_cast<std::size_t>(state.range(0));
  const std::size_t C = ds.feature_dim(), D = ds.attribute_dim();
  std::vector<std::size_t> rows(ds.train_idx.begin(), ds.train_idx.begin() + static_cast<std::ptrdiff_t>(batch));
  std::vector<std::size_t> labels;
  for (std::size_t r : rows) labels.push_back(ds.labels[r]);
  const Matrix x = gather_rows(ds.features, rows);
  const RefinerParams p{filled(C, C, rng), filled(C, D, rng)};
  for (auto _ : state)
    benchmark::DoNotOptimize(sof_gradients(p, x, labels, ds.attributes, ds.seen_classes, 10.0));
}
BENCHMARK(BM_SofGradients)->Arg(16)->Arg(128);

void BM_CalibratedSweep(benchmark::State& state) {
  const SplitDataset& ds = bench_data();
  const PrototypeModel model = init_prototype_model(ds.attribute_dim(), ds.feature_dim(), TrainConfig{});
  const auto grid = default_delta_grid();
  for (auto _ : state) benchmark::DoNotOptimize(cs_sweep(model, ds, grid));
}
BENCHMARK(BM_CalibratedSweep);

void BM_TrainEpoch(benchmark::State& state) {
  const SplitDataset& ds = bench_data();
  TrainConfig tc;
  tc.epochs = 1;
  tc.mode = state.range(0) == 0 ? TrainMode::kS2vBaseline : TrainMode::kEpEi;
  for (auto _ : state) benchmark::DoNotOptimize(train_prototypes(ds, tc));
}
BENCHMARK(BM_TrainEpoch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
