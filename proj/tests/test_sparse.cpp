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
#include <numeric>

#include <doctest.h>

#include "ecoattn/errors.hpp"
#include "ecoattn/rng.hpp"
#include "ecoattn/sparse.hpp"

using namespace ecoattn;

namespace {

AttentionSpec l1_spec(double lambda, std::size_t d_k) {
  return AttentionSpec{ScoreKind::l1(), lambda, d_k, std::nullopt};
}

struct Instance {
  Matrix q, k, v;
};

Instance random_instance(std::uint64_t seed, std::size_t n, std::size_t d_k,
                         std::size_t d_v) {
  SplitMix64 rng(seed);
  return {rand_matrix(rng, n, d_k, 1.0), rand_matrix(rng, n, d_k, 1.0),
          rand_matrix(rng, n, d_v, 1.0)};
}

}  // namespace

TEST_SUITE_BEGIN("sparse");

TEST_CASE("full window with no globals reproduces dense attention") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    SplitMix64 shape_rng(seed * 1000);
    const std::size_t n = 1 + shape_rng.next_below(9);
    const std::size_t d_k = 1 + shape_rng.next_below(8);
    const Instance in = random_instance(seed, n, d_k, d_k);
    const AttentionSpec spec = l1_spec(1.5, d_k);
    const WindowSpec win{2 * n, {}};
    const Matrix sparse = longformer_l1_forward(spec, win, in.q, in.k, in.v);
    const Matrix dense = attention_forward(spec, in.q, in.k, in.v).output;
    CHECK(max_abs_diff(sparse, dense) <= 1e-12);
  }
}

TEST_CASE("a singleton sequence forwards its value") {
  const Instance in = random_instance(3, 1, 4, 3);
  const Matrix out = longformer_l1_forward(l1_spec(1.0, 4), WindowSpec{2, {}},
                                           in.q, in.k, in.v);
  CHECK(max_abs_diff(out, in.v) <= 1e-15);
}

TEST_CASE("all-global tokens with a full window double the dense output") {
  const std::size_t n = 6;
  const Instance in = random_instance(4, n, 5, 3);
  const AttentionSpec spec = l1_spec(0.9, 5);
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  const Matrix out =
      longformer_l1_forward(spec, WindowSpec{2 * n, all}, in.q, in.k, in.v);
  const Matrix dense = attention_forward(spec, in.q, in.k, in.v).output;
  CHECK(max_abs_diff(out, scale(dense, 2.0)) <= 1e-12);
}

TEST_CASE("score tally counts clipped windows exactly") {
  SUBCASE("full-coverage window matches the closed form") {
    const std::size_t n = 5, d_k = 4;
    const AttentionSpec spec = l1_spec(1.0, d_k);
    const Instance in = random_instance(5, n, d_k, 2);
    const WindowSpec win{2 * n, {0, 2}};
    OpTally tally;
    longformer_l1_forward(spec, win, in.q, in.k, in.v, &tally);
    const std::uint64_t expected =
        n * (std::min(win.window + 1, n) + win.global_indices.size()) * d_k;
    CHECK(tally.abs_diffs == expected);
    CHECK(tally.adds == expected);
    CHECK(tally.mults == 0);
  }

  SUBCASE("boundary-clipped windows count their true sizes") {
    const std::size_t n = 6, d_k = 3;
    const AttentionSpec spec = l1_spec(1.0, d_k);
    const Instance in = random_instance(6, n, d_k, 2);
    const WindowSpec win{2, {1}};
    OpTally tally;
    longformer_l1_forward(spec, win, in.q, in.k, in.v, &tally);
    std::uint64_t expected = 0;
    for (std::size_t t = 0; t < n; ++t) {
      const auto [lo, hi] = win.bounds(t, n);
      expected += (hi - lo + 1 + win.global_indices.size()) * d_k;
    }
    // Windows at t = 0 and t = n-1 shrink to two tokens.
    CHECK(expected == (2 + 3 + 3 + 3 + 3 + 2 + 6) * d_k);
    CHECK(tally.abs_diffs == expected);
    CHECK(tally.adds == expected);
  }
}

TEST_CASE("tokens outside the window cannot influence a row (locality)") {
  const std::size_t n = 8, d_k = 4;
  const Instance in = random_instance(7, n, d_k, 3);
  const AttentionSpec spec = l1_spec(1.0, d_k);
  const WindowSpec win{2, {}};
  const Matrix base = longformer_l1_forward(spec, win, in.q, in.k, in.v);

  const std::size_t t = 4;  // window is [3, 5]
  Instance tampered = in;
  SplitMix64 noise(123);
  for (std::size_t j = 0; j < n; ++j) {
    if (j + 1 >= t && j <= t + 1) continue;  // leave [t-1, t+1] intact
    for (std::size_t m = 0; m < d_k; ++m) {
      tampered.k(j, m) += noise.next_uniform(-5.0, 5.0);
      tampered.v(j, m % tampered.v.cols()) += noise.next_uniform(-5.0, 5.0);
    }
  }
  const Matrix after =
      longformer_l1_forward(spec, win, tampered.q, tampered.k, tampered.v);
  for (std::size_t c = 0; c < base.cols(); ++c) {
    CHECK(std::abs(base(t, c) - after(t, c)) <= 1e-12);
  }
}

TEST_CASE("window invariants are enforced") {
  const Instance in = random_instance(8, 4, 3, 3);
  const AttentionSpec spec = l1_spec(1.0, 3);
  CHECK_THROWS_AS(
      longformer_l1_forward(spec, WindowSpec{3, {}}, in.q, in.k, in.v),
      ConfigError);
  CHECK_THROWS_AS(
      longformer_l1_forward(spec, WindowSpec{0, {}}, in.q, in.k, in.v),
      ConfigError);
  CHECK_THROWS_AS(
      longformer_l1_forward(spec, WindowSpec{2, {4}}, in.q, in.k, in.v),
      ConfigError);
  CHECK_THROWS_AS(
      longformer_l1_forward(spec, WindowSpec{2, {2, 1}}, in.q, in.k, in.v),
      ConfigError);
  CHECK_THROWS_AS(longformer_l1_forward(AttentionSpec{ScoreKind::dot_product(),
                                                      1.0, 3, std::nullopt},
                                        WindowSpec{2, {}}, in.q, in.k, in.v),
                  ConfigError);
}

TEST_CASE("identity projection reproduces dense attention") {
  for (std::uint64_t seed = 11; seed <= 20; ++seed) {
    SplitMix64 shape_rng(seed * 977);
    const std::size_t n = 1 + shape_rng.next_below(9);
    const std::size_t d_k = 1 + shape_rng.next_below(8);
    const Instance in = random_instance(seed, n, d_k, d_k);
    const AttentionSpec spec = l1_spec(2.0, d_k);
    const Matrix lin = linformer_l1_forward(spec, ProjectionSpec::identity(n),
                                            in.q, in.k, in.v);
    const Matrix dense = attention_forward(spec, in.q, in.k, in.v).output;
    CHECK(max_abs_diff(lin, dense) <= 1e-12);
  }
}

TEST_CASE("rank-1 projection collapses every row to the single pseudo-value") {
  const std::size_t n = 5;
  const Instance in = random_instance(21, n, 4, 3);
  SplitMix64 rng(22);
  const ProjectionSpec proj{1, rand_matrix(rng, 1, n, 0.5),
                            rand_matrix(rng, 1, n, 0.5)};
  const Matrix out = linformer_l1_forward(l1_spec(1.0, 4), proj, in.q, in.k, in.v);
  const Matrix pseudo_value = matmul(proj.e_v, in.v);  // 1 x d_v
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < out.cols(); ++c) {
      CHECK(out(i, c) == doctest::Approx(pseudo_value(0, c)).epsilon(1e-14));
    }
  }
}

TEST_CASE("projection attention matches the compose-by-hand oracle") {
  const std::size_t n = 8, d_k = 16, k_dim = 4;
  const Instance in = random_instance(23, n, d_k, d_k);
  SplitMix64 rng(24);
  const ProjectionSpec proj{k_dim, rand_matrix(rng, k_dim, n, 0.5),
                            rand_matrix(rng, k_dim, n, 0.5)};
  const AttentionSpec spec = l1_spec(1.0, d_k);
  const Matrix out = linformer_l1_forward(spec, proj, in.q, in.k, in.v);
  // Oracle: explicit two-step composition.
  const Matrix k_small = matmul(proj.e_k, in.k);
  const Matrix v_small = matmul(proj.e_v, in.v);
  const Matrix scores = score_matrix(spec, in.q, k_small);
  const Matrix expect = matmul(softmax_rows(scores), v_small);
  CHECK(max_abs_diff(out, expect) <= 1e-12);
}

TEST_CASE("projection shape mismatches are rejected") {
  const Instance in = random_instance(25, 4, 3, 3);
  SplitMix64 rng(26);
  const ProjectionSpec wrong{2, rand_matrix(rng, 2, 5, 1.0),
                             rand_matrix(rng, 2, 4, 1.0)};
  CHECK_THROWS_AS(linformer_l1_forward(l1_spec(1.0, 3), wrong, in.q, in.k, in.v),
                  DimensionError);
}

TEST_SUITE_END();
