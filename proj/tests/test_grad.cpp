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
#include <cmath>
#include <limits>

#include <doctest.h>

#include <nlohmann/json.hpp>

#include "ecoattn/errors.hpp"
#include "ecoattn/grad.hpp"
#include "ecoattn/rng.hpp"

using namespace ecoattn;

TEST_SUITE_BEGIN("grad");

TEST_CASE("finite differences are exact on a quadratic") {
  SplitMix64 rng(41);
  const Matrix x = rand_matrix(rng, 4, 3, 2.0);
  const ScalarFn f = [](const std::vector<Matrix>& in) {
    double acc = 0.0;
    for (double v : in[0].data()) acc += 0.5 * v * v;
    return acc;
  };
  const FdReport r = finite_difference_check(f, {x}, {x}, {"x"}, 1e-5);
  CHECK(r.max_rel_err < 1e-9);
  CHECK(r.step == 1e-5);
  CHECK(r.skipped_coordinates == 0);
  CHECK(r.checked_coordinates == 12);
}

TEST_CASE("fd step outside [1e-7, 1e-3] is rejected") {
  const Matrix x(1, 1, 1.0);
  const ScalarFn f = [](const std::vector<Matrix>& in) { return in[0](0, 0); };
  CHECK_THROWS_AS(finite_difference_check(f, {x}, {x}, {"x"}, 1e-8),
                  ParameterError);
  CHECK_THROWS_AS(finite_difference_check(f, {x}, {x}, {"x"}, 1e-2),
                  ParameterError);
}

TEST_CASE("non-finite objective values raise an oracle error") {
  const Matrix x(1, 1, 1.0);
  const ScalarFn f = [](const std::vector<Matrix>&) {
    return std::numeric_limits<double>::infinity();
  };
  CHECK_THROWS_AS(finite_difference_check(f, {x}, {x}, {"x"}, 1e-5), OracleError);
}

TEST_CASE("zero upstream yields zero gradients") {
  SplitMix64 rng(42);
  const Matrix q = rand_matrix(rng, 3, 4, 1.0);
  const Matrix k = rand_matrix(rng, 5, 4, 1.0);
  const Matrix v = rand_matrix(rng, 5, 2, 1.0);
  const Matrix upstream(3, 2, 0.0);
  for (const ScoreKind& kind :
       {ScoreKind::dot_product(), ScoreKind::l1(), ScoreKind::squared_l2(),
        ScoreKind::lp(1.5)}) {
    const AttentionSpec spec{kind, 1.1, 4, std::nullopt};
    const AttentionGrads g = attention_backward(spec, q, k, v, upstream);
    for (double x : g.d_q.data()) CHECK(x == 0.0);
    for (double x : g.d_k.data()) CHECK(x == 0.0);
    for (double x : g.d_v.data()) CHECK(x == 0.0);
  }
}

TEST_CASE("a single key pins alpha, so only dV survives") {
  SplitMix64 rng(43);
  const Matrix q = rand_matrix(rng, 3, 4, 1.0);
  const Matrix k = rand_matrix(rng, 1, 4, 1.0);
  const Matrix v = rand_matrix(rng, 1, 2, 1.0);
  const Matrix upstream = rand_matrix(rng, 3, 2, 1.0);
  const AttentionSpec spec{ScoreKind::l1(), 2.0, 4, std::nullopt};
  const AttentionGrads g = attention_backward(spec, q, k, v, upstream);
  for (double x : g.d_q.data()) CHECK(std::abs(x) <= 1e-15);
  for (double x : g.d_k.data()) CHECK(std::abs(x) <= 1e-15);
  // dV = alpha^T upstream with alpha = all ones column.
  for (std::size_t c = 0; c < 2; ++c) {
    double col_sum = 0.0;
    for (std::size_t i = 0; i < 3; ++i) col_sum += upstream(i, c);
    CHECK(g.d_v(0, c) == doctest::Approx(col_sum).epsilon(1e-12));
  }
}

TEST_CASE("dV equals alpha^T upstream for every kind") {
  SplitMix64 rng(44);
  const Matrix q = rand_matrix(rng, 4, 3, 1.0);
  const Matrix k = rand_matrix(rng, 6, 3, 1.0);
  const Matrix v = rand_matrix(rng, 6, 5, 1.0);
  const Matrix upstream = rand_matrix(rng, 4, 5, 1.0);
  for (const ScoreKind& kind :
       {ScoreKind::dot_product(), ScoreKind::l1(), ScoreKind::squared_l2(),
        ScoreKind::lp(2.5)}) {
    const AttentionSpec spec{kind, 0.8, 3, std::nullopt};
    const AttentionGrads g = attention_backward(spec, q, k, v, upstream);
    const Matrix alpha = attention_forward(spec, q, k, v).alpha;
    CHECK(max_abs_diff(g.d_v, matmul(transpose(alpha), upstream)) <= 1e-12);
  }
}

TEST_CASE("dot-product attention gradcheck (oracle self-check)") {
  const AttentionSpec spec{ScoreKind::dot_product(), 1.0, 6, std::nullopt};
  const GradcheckResult r = gradcheck_attention(spec, 5, 1001);
  CHECK(r.report.max_rel_err < 1e-6);
}

TEST_CASE("l1 attention gradcheck on the 5x7 instance") {
  const AttentionSpec spec{ScoreKind::l1(), 2.0, 7, std::nullopt};
  const GradcheckResult r = gradcheck_attention(spec, 5, 1002, 1e-5, 1e-3);
  CHECK(r.report.max_rel_err < 1e-5);
  CHECK(r.report.skipped_coordinates == 0);  // jitter cleared every kink
}

TEST_CASE("gradcheck across kinds and seeds") {
  const std::vector<ScoreKind> kinds{ScoreKind::dot_product(), ScoreKind::l1(),
                                     ScoreKind::squared_l2(), ScoreKind::lp(1.5)};
  for (const ScoreKind& kind : kinds) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      SplitMix64 shape_rng(seed * 31 + 7);
      const std::size_t n = 2 + shape_rng.next_below(7);
      const std::size_t d_k = 1 + shape_rng.next_below(8);
      const AttentionSpec spec{kind, 1.5, d_k, std::nullopt};
      const GradcheckResult r = gradcheck_attention(spec, n, seed);
      INFO("kind=" << r.kind << " seed=" << seed << " n=" << n << " dk=" << d_k);
      CHECK(r.report.max_rel_err < 1e-5);
    }
  }
}

TEST_CASE("an exact kink coordinate is skipped, not compared") {
  // Without jitter, q(0,0) == k(0,0) sits exactly on the |.| cusp.
  SplitMix64 rng(45);
  Matrix q = rand_matrix(rng, 2, 2, 1.0);
  Matrix k = rand_matrix(rng, 2, 2, 1.0);
  k(0, 0) = q(0, 0);
  const Matrix v = rand_matrix(rng, 2, 2, 1.0);
  const Matrix upstream = rand_matrix(rng, 2, 2, 1.0);
  const AttentionSpec spec{ScoreKind::l1(), 1.0, 2, std::nullopt};
  const AttentionGrads g = attention_backward(spec, q, k, v, upstream);
  const ScalarFn loss = [&](const std::vector<Matrix>& in) {
    const AttentionResult r = attention_forward(spec, in[0], in[1], in[2]);
    double acc = 0.0;
    for (std::size_t i = 0; i < upstream.size(); ++i) {
      acc += upstream.data()[i] * r.output.data()[i];
    }
    return acc;
  };
  const SkipFn skip = [&](std::size_t t, std::size_t r, std::size_t c) {
    if (t == 2) return false;
    const Matrix& own = t == 0 ? q : k;
    const Matrix& other = t == 0 ? k : q;
    for (std::size_t j = 0; j < other.rows(); ++j) {
      if (own(r, c) == other(j, c)) return true;
    }
    return false;
  };
  const FdReport r = finite_difference_check(loss, {q, k, v},
                                             {g.d_q, g.d_k, g.d_v},
                                             {"q", "k", "v"}, 1e-5, skip);
  CHECK(r.skipped_coordinates >= 2);  // the q coordinate and its k mirror
  CHECK(r.checked_coordinates == 12 - r.skipped_coordinates);
}

TEST_CASE("translating q and k together leaves the l1 loss flat") {
  SplitMix64 rng(46);
  Matrix q = rand_matrix(rng, 4, 5, 1.0);
  const Matrix k = rand_matrix(rng, 6, 5, 1.0);
  const Matrix v = rand_matrix(rng, 6, 3, 1.0);
  const Matrix upstream = rand_matrix(rng, 4, 3, 1.0);
  const Matrix c = rand_matrix(rng, 1, 5, 1.0);
  nudge_from_kinks(q, k, 1e-3);
  const AttentionSpec spec{ScoreKind::l1(), 1.3, 5, std::nullopt};
  const AttentionGrads g = attention_backward(spec, q, k, v, upstream);
  // Directional derivative along (c broadcast to rows of q, same for k).
  double dir = 0.0;
  for (std::size_t m = 0; m < 5; ++m) {
    double col = 0.0;
    for (std::size_t i = 0; i < q.rows(); ++i) col += g.d_q(i, m);
    for (std::size_t j = 0; j < k.rows(); ++j) col += g.d_k(j, m);
    dir += col * c(0, m);
  }
  CHECK(std::abs(dir) <= 1e-8);
}

TEST_CASE("nudge pushes every coordinate clear of key ties") {
  SplitMix64 rng(47);
  Matrix q = rand_matrix(rng, 4, 3, 1.0);
  const Matrix k = rand_matrix(rng, 5, 3, 1.0);
  q(2, 1) = k(3, 1);  // plant an exact tie
  nudge_from_kinks(q, k, 1e-3);
  for (std::size_t i = 0; i < q.rows(); ++i) {
    for (std::size_t m = 0; m < q.cols(); ++m) {
      for (std::size_t j = 0; j < k.rows(); ++j) {
        CHECK(std::abs(q(i, m) - k(j, m)) >= 1e-3);
      }
    }
  }
}

TEST_CASE("gradcheck report serializes with the documented fields") {
  const AttentionSpec spec{ScoreKind::l1(), 2.0, 3, std::nullopt};
  const GradcheckResult r = gradcheck_attention(spec, 4, 99);
  const nlohmann::json j = nlohmann::json::parse(gradcheck_json(r));
  CHECK(j.at("kind") == "l1");
  CHECK(j.at("lambda") == 2.0);
  CHECK(j.at("n") == 4);
  CHECK(j.at("d_k") == 3);
  CHECK(j.at("max_rel_err").is_number());
  CHECK(j.at("worst_coordinate").at("tensor").is_string());
  CHECK(j.at("step") == 1e-5);
  CHECK(j.at("skipped_coordinates").is_number_integer());
}

TEST_CASE("attention_backward rejects a wrong upstream shape") {
  const Matrix q(2, 3), k(4, 3), v(4, 2);
  const AttentionSpec spec{ScoreKind::l1(), 1.0, 3, std::nullopt};
  CHECK_THROWS_AS(attention_backward(spec, q, k, v, Matrix(2, 5)),
                  DimensionError);
}

TEST_SUITE_END();
