/* Copyright 2026 The EcoAttn Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include <benchmark/benchmark.h>

#include <cstdint>

#include "ecoattn/attention.hpp"
#include "ecoattn/rng.hpp"
#include "ecoattn/sparse.hpp"

namespace {

using namespace ecoattn;

struct Inputs {
  Matrix q, k, v;
};

Inputs make_inputs(std::size_t n, std::size_t d_k) {
  SplitMix64 rng(123);
  return {rand_matrix(rng, n, d_k, 1.0), rand_matrix(rng, n, d_k, 1.0),
          rand_matrix(rng, n, d_k, 1.0)};
}

void BM_DenseScores(benchmark::State& state, ScoreKind kind) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const std::size_t d_k = 64;
  const Inputs in = make_inputs(n, d_k);
  const AttentionSpec spec{kind, 1.0, d_k, std::nullopt};
  for (auto _ : state) {
    Matrix s = score_matrix(spec, in.q, in.k);
    benchmark::DoNotOptimize(s.data().data());
  }
  state.SetComplexityN(static_cast<std::int64_t>(n));
}

void BM_DotScores(benchmark::State& state) {
  BM_DenseScores(state, ScoreKind::dot_product());
}
void BM_L1Scores(benchmark::State& state) {
  BM_DenseScores(state, ScoreKind::l1());
}

void BM_DenseL1Forward(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const std::size_t d_k = 64;
  const Inputs in = make_inputs(n, d_k);
  const AttentionSpec spec{ScoreKind::l1(), 1.0, d_k, std::nullopt};
  for (auto _ : state) {
    AttentionResult r = attention_forward(spec, in.q, in.k, in.v);
    benchmark::DoNotOptimize(r.output.data().data());
  }
  state.SetComplexityN(static_cast<std::int64_t>(n));
}

void BM_LongformerL1Forward(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const std::size_t d_k = 64;
  const Inputs in = make_inputs(n, d_k);
  const AttentionSpec spec{ScoreKind::l1(), 1.0, d_k, std::nullopt};
  const WindowSpec win{16, {0}};
  for (auto _ : state) {
    Matrix out = longformer_l1_forward(spec, win, in.q, in.k, in.v);
    benchmark::DoNotOptimize(out.data().data());
  }
  state.SetComplexityN(static_cast<std::int64_t>(n));
}

void BM_LinformerL1Forward(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const std::size_t d_k = 64;
  const std::size_t k_dim = 32;
  const Inputs in = make_inputs(n, d_k);
  SplitMix64 rng(7);
  const ProjectionSpec proj{k_dim, rand_matrix(rng, k_dim, n, 0.2),
                            rand_matrix(rng, k_dim, n, 0.2)};
  const AttentionSpec spec{ScoreKind::l1(), 1.0, d_k, std::nullopt};
  for (auto _ : state) {
    Matrix out = linformer_l1_forward(spec, proj, in.q, in.k, in.v);
    benchmark::DoNotOptimize(out.data().data());
  }
  state.SetComplexityN(static_cast<std::int64_t>(n));
}

}  // namespace

BENCHMARK(BM_DotScores)->RangeMultiplier(2)->Range(64, 512)->Complexity();
BENCHMARK(BM_L1Scores)->RangeMultiplier(2)->Range(64, 512)->Complexity();
BENCHMARK(BM_DenseL1Forward)->RangeMultiplier(2)->Range(64, 512)->Complexity();
BENCHMARK(BM_LongformerL1Forward)->RangeMultiplier(2)->Range(64, 512)->Complexity();
BENCHMARK(BM_LinformerL1Forward)->RangeMultiplier(2)->Range(64, 512)->Complexity();

BENCHMARK_MAIN();
