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
#ifndef ECOATTN_GRAD_HPP_
#define ECOATTN_GRAD_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ecoattn/attention.hpp"

namespace ecoattn {

struct AttentionGrads {
  Matrix d_q;
  Matrix d_k;
  Matrix d_v;
};

/// Hand-derived backward pass for attention_forward under any score kind.
/// With alpha = softmax(S) and O = alpha V:
///   dV = alpha^T * upstream                       (exact for every kind)
///   dAlpha = upstream * V^T
///   dS_ij = alpha_ij (dAlpha_ij - sum_j' dAlpha_ij' alpha_ij')
/// and dS maps back through the score function; the L1 branch uses
/// sign(q_im - k_jm) with sign(0) := 0, the standard subgradient choice.
/// Trained-parameter gradients only: lambda is a tuned hyperparameter and
/// gets no derivative.
AttentionGrads attention_backward(const AttentionSpec& spec, const Matrix& q,
                                  const Matrix& k, const Matrix& v,
                                  const Matrix& upstream);

/// Gradient backward through softmax rows alone: given alpha = softmax_rows(s)
/// and d_alpha, returns d_s. Shared by the attention backward and the trainer.
Matrix softmax_rows_backward(const Matrix& alpha, const Matrix& d_alpha);

struct Coordinate {
  std::string tensor;  // "q" | "k" | "v" | caller-defined
  std::size_t row = 0;
  std::size_t col = 0;
};

struct FdReport {
  double max_rel_err = 0.0;
  Coordinate worst;
  double step = 0.0;
  std::uint64_t skipped_coordinates = 0;
  std::uint64_t checked_coordinates = 0;
};

using ScalarFn = std::function<double(const std::vector<Matrix>&)>;
/// skip(tensor_index, row, col) -> true to leave a coordinate out of the
/// comparison (kink policy).
using SkipFn = std::function<bool(std::size_t, std::size_t, std::size_t)>;

/// Central finite differences (f(x+h) - f(x-h)) / 2h per coordinate of every
/// input, compared against the supplied analytic gradients with relative
/// error |fd - g| / max(1, |g|). Step must lie in [1e-7, 1e-3]. Non-finite
/// objective values raise OracleError.
FdReport finite_difference_check(const ScalarFn& f, std::vector<Matrix> inputs,
                                 const std::vector<Matrix>& analytic,
                                 const std::vector<std::string>& names,
                                 double step, const SkipFn& skip = nullptr);

/// Pushes every q entry at least `tol` away from every key entry in the same
/// feature column, so central differences never straddle an L1 kink.
/// Deterministic; throws NumericError if a safe spot cannot be found.
void nudge_from_kinks(Matrix& q, const Matrix& k, double tol);

struct GradcheckResult {
  FdReport report;
  std::string kind;
  double lambda = 0.0;
  std::size_t n = 0;
  std::size_t d_k = 0;
};

/// End-to-end check on a seeded random instance: scalar loss
/// sum(upstream .* attention_forward(...).output), analytic gradients from
/// attention_backward, central differences over every q/k/v coordinate.
/// For distance kinds with a kink (l1, lp) the inputs are first nudged
/// `kink_tol` away from coordinate ties, and any coordinate still within
/// `kink_tol` of a tie is skipped (with kink_tol = 0 only exact ties skip).
GradcheckResult gradcheck_attention(const AttentionSpec& spec, std::size_t n,
                                    std::uint64_t seed, double step = 1e-5,
                                    double kink_tol = 1e-3);

std::string gradcheck_json(const GradcheckResult& r);

}  // namespace ecoattn

#endif  // ECOATTN_GRAD_HPP_
