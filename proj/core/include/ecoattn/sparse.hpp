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
#ifndef ECOATTN_SPARSE_HPP_
#define ECOATTN_SPARSE_HPP_

#include <cstddef>
#include <utility>
#include <vector>

#include "ecoattn/attention.hpp"
#include "ecoattn/opcount.hpp"

namespace ecoattn {

/// Sliding-window-plus-global attention pattern. Token t attends to
/// [t - window/2, t + window/2] clipped to the sequence, plus a shared set of
/// global token positions.
struct WindowSpec {
  std::size_t window = 2;                    // even, >= 2
  std::vector<std::size_t> global_indices;   // sorted, each < sequence length

  /// Clipped inclusive window [lo, hi] for token t in a length-n sequence.
  std::pair<std::size_t, std::size_t> bounds(std::size_t t, std::size_t n) const;

  void validate(std::size_t n) const;  // throws ConfigError
};

/// Windowed L1 attention with an additive global term:
///   out_t = softmax(-lambda D1(Q_t, K_win(t)) / sqrt(Dk)) V_win(t)
///         + softmax(-lambda D1(Q_t, K_G) / sqrt(Dk)) V_G
/// The global term is the zero vector when G is empty. Work scales as
/// O(N (w + |G|) Dk). The two terms are summed literally, so a window that
/// overlaps G counts those keys twice; with w >= 2N and G covering every
/// token the result is exactly twice the dense output.
///
/// When `tally` is non-null the score computation is counted exactly:
/// (window size of t, after clipping) + |G| absolute differences and adds per
/// feature, summed over tokens.
Matrix longformer_l1_forward(const AttentionSpec& spec, const WindowSpec& win,
                             const Matrix& q, const Matrix& k, const Matrix& v,
                             OpTally* tally = nullptr);

/// Low-rank projection attention: keys and values are compressed to k_dim
/// pseudo-tokens by the k_dim x N projections e_k and e_v, then dense L1
/// attention runs against the compressed sequence. Score work is
/// O(N k_dim Dk).
struct ProjectionSpec {
  std::size_t k_dim = 1;
  Matrix e_k;  // k_dim x N
  Matrix e_v;  // k_dim x N

  static ProjectionSpec identity(std::size_t n);

  void validate(std::size_t n) const;  // throws DimensionError / ConfigError
};

Matrix linformer_l1_forward(const AttentionSpec& spec, const ProjectionSpec& proj,
                            const Matrix& q, const Matrix& k, const Matrix& v);

}  // namespace ecoattn

#endif  // ECOATTN_SPARSE_HPP_
