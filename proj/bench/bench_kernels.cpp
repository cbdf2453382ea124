/* Copyright 2026 The xlad Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


// Serial against OpenMP kernels at pipeline-scale sizes.

#include <random>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "oracles.hpp"
#include "xlad/kernels.hpp"

namespace {

using namespace xlad;

constexpr int kDim = 64;
constexpr int kEvents = 600;

std::vector<LogSequence> random_sequences(std::size_t count, int events, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<LogSequence> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    out[i].sequence_id = "s:" + std::to_string(i);
    const std::size_t len = 5 + rng() % 40;
    for (std::size_t k = 0; k < len; ++k) out[i].events.push_back(static_cast<int>(rng() % events));
  }
  return out;
}

template <auto Kernel>
void BM_event_max_similarity(benchmark::State& state) {
  const Matrix events = testing::random_matrix(kDim, kEvents, 1);
  const Matrix protos = testing::random_matrix(kDim, static_cast<int>(state.range(0)), 2);
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(events, protos));
  state.SetItemsProcessed(state.iterations() * kEvents * state.range(0));
}

template <auto Kernel>
void BM_sequence_min_scores(benchmark::State& state) {
  const auto seqs = random_sequences(static_cast<std::size_t>(state.range(0)), kEvents, 3);
  std::vector<double> best(kEvents);
  std::mt19937_64 rng(4);
  for (auto& b : best) b = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(seqs, best));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto Kernel>
void BM_cosine_scan(benchmark::State& state) {
  const Matrix entries = testing::random_matrix(kDim, static_cast<int>(state.range(0)), 5);
  const Vector query = testing::random_matrix(kDim, 1, 6).col(0);
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(entries, query));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

struct ModelFixture {
  ModelParameters params = testing::random_parameters(ModelDims{kDim, 32}, 7, 0.2);
  Matrix inputs = testing::random_matrix(kDim, kEvents, 8);
  Matrix projected = project_inputs(params, inputs);
  testing::TinyBatch batch;
  explicit ModelFixture(std::size_t count) : batch(testing::random_batch(count, kEvents, 40, 9)) {}
};

template <auto Kernel>
void BM_forward_batch(benchmark::State& state) {
  const ModelFixture f(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(f.params, f.projected, f.batch.samples));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto Kernel>
void BM_gradient_batch(benchmark::State& state) {
  const ModelFixture f(static_cast<std::size_t>(state.range(0)));
  const auto traces = kernels::forward_batch_serial(f.params, f.projected, f.batch.samples);
  const auto weights = LossWeights::combined(1.0, 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(Kernel(f.params, f.inputs, traces, f.batch.samples, weights, GradientScope::kAll));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto Kernel>
void BM_predict_batch(benchmark::State& state) {
  const ModelFixture f(1);
  const auto seqs = random_sequences(static_cast<std::size_t>(state.range(0)), kEvents, 10);
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(f.params, f.inputs, seqs));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

BENCHMARK(BM_event_max_similarity<kernels::event_max_similarity_serial>)->Arg(40)->Arg(200);
BENCHMARK(BM_event_max_similarity<kernels::event_max_similarity_omp>)->Arg(40)->Arg(200);
BENCHMARK(BM_sequence_min_scores<kernels::sequence_min_scores_serial>)->Arg(5000);
BENCHMARK(BM_sequence_min_scores<kernels::sequence_min_scores_omp>)->Arg(5000);
BENCHMARK(BM_cosine_scan<kernels::cosine_scan_serial>)->Arg(10000);
BENCHMARK(BM_cosine_scan<kernels::cosine_scan_omp>)->Arg(10000);
BENCHMARK(BM_forward_batch<kernels::forward_batch_serial>)->Arg(256);
BENCHMARK(BM_forward_batch<kernels::forward_batch_omp>)->Arg(256);
BENCHMARK(BM_gradient_batch<kernels::gradient_batch_serial>)->Arg(256);
BENCHMARK(BM_gradient_batch<kernels::gradient_batch_omp>)->Arg(256);
BENCHMARK(BM_predict_batch<kernels::predict_batch_serial>)->Arg(1000);
BENCHMARK(BM_predict_batch<kernels::predict_batch_omp>)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
