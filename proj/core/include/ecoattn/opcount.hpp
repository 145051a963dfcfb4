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
#ifndef ECOATTN_OPCOUNT_HPP_
#define ECOATTN_OPCOUNT_HPP_

#include <cstdint>
#include <string>

#include "ecoattn/attention.hpp"

namespace ecoattn {

/// Exact scalar-operation counters. Tallies are value types and compose by
/// addition.
struct OpTally {
  std::uint64_t mults = 0;
  std::uint64_t adds = 0;
  std::uint64_t abs_diffs = 0;
  std::uint64_t exps = 0;
  std::uint64_t divs = 0;

  OpTally& operator+=(const OpTally& o) {
    mults += o.mults;
    adds += o.adds;
    abs_diffs += o.abs_diffs;
    exps += o.exps;
    divs += o.divs;
    return *this;
  }
  friend OpTally operator+(OpTally a, const OpTally& b) { return a += b; }
  friend bool operator==(const OpTally&, const OpTally&) = default;

  std::uint64_t total() const { return mults + adds + abs_diffs + exps + divs; }
};

/// Per-operation energy costs in picojoules. The defaults are the published
/// FP32 figures: 3.7 pJ per multiply, 0.9 pJ per add. An absolute difference
/// is costed like an add (one subtract; the sign strip is treated as free).
/// Exponentials and divisions are excluded (cost 0) by default because the
/// score-level comparison never reaches them.
struct EnergyModel {
  double pj_mult = 3.7;
  double pj_add = 0.9;
  double pj_abs_diff = 0.9;
  double pj_exp = 0.0;
  double pj_div = 0.0;
};

/// Closed-form tally for computing an n_q x n_k score matrix over d_k
/// features. DotProduct: n_q*n_k*d_k multiplies and the same number of adds.
/// L1: the multiplies become absolute differences, adds stay equal. The per
/// entry add count is d_k (one accumulate per term), matching the published
/// convention rather than the strict d_k - 1 of a reduction tree. Scaling by
/// lambda/sqrt(Dk) is outside the counted scope. Only DotProduct and L1 are
/// defined; other kinds raise ParameterError.
OpTally score_op_counts(const ScoreKind& kind, std::size_t n_q, std::size_t n_k,
                        std::size_t d_k);

/// Same scope as score_op_counts but for a whole single-head attention layer
/// with d_model = d_k: the three input projections, the scores, the softmax
/// (subtract-max, exp, accumulate, divide per entry) and the alpha*V product.
/// Both score kinds keep real multiplies in the projections and in alpha*V.
OpTally full_layer_op_counts(const ScoreKind& kind, std::size_t n, std::size_t d_k);

/// Computes score_matrix(spec, q, k) through instrumented scalar loops,
/// accumulating every multiply/add/absolute-difference into `tally`. The
/// returned matrix is bit-identical to score_matrix and the tally equals
/// score_op_counts for the same shape. DotProduct and L1 only.
Matrix counted_score_matrix(const AttentionSpec& spec, const Matrix& q,
                            const Matrix& k, OpTally& tally);

/// tally -> picojoules under the model.
double energy_estimate(const OpTally& tally, const EnergyModel& model);

struct ReductionReport {
  std::size_t n = 0;
  std::size_t d_k = 0;
  bool full_layer = false;
  OpTally dot;
  OpTally l1;
  double dot_pj = 0.0;
  double l1_pj = 0.0;
  double reduction_fraction = 0.0;  // 1 - l1_pj / dot_pj
  double mult_add_ratio = 0.0;      // pj_mult / pj_add
};

/// Energy comparison of dot-product vs L1 score computation at one shape.
/// With the default model the reduction fraction is 1 - 1.8/4.6 ~ 0.6087 for
/// every (n, d_k). Throws NumericError when the dot-side energy is zero.
ReductionReport reduction_report(std::size_t n, std::size_t d_k,
                                 const EnergyModel& model = EnergyModel{},
                                 bool full_layer = false);

std::string reduction_report_json(const ReductionReport& r);

/// CSV sweep over shape grids, one reduction_report row per (n, d_k) pair.
std::string reduction_sweep_csv(std::span<const std::size_t> ns,
                                std::span<const std::size_t> dks,
                                const EnergyModel& model = EnergyModel{},
                                bool full_layer = false);

}  // namespace ecoattn

#endif  // ECOATTN_OPCOUNT_HPP_
