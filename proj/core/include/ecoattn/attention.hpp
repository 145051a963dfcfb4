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
#ifndef ECOATTN_ATTENTION_HPP_
#define ECOATTN_ATTENTION_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ecoattn/matrix.hpp"

namespace ecoattn {

enum class ScoreType { kDotProduct, kL1, kSquaredL2, kLp };

/// Which score function an attention layer uses. DotProduct is the standard
/// scaled dot product; L1 scores by negative Manhattan distance (Laplacian
/// kernel); SquaredL2 by negative squared Euclidean distance (Gaussian
/// kernel); Lp generalizes to any Minkowski distance with p >= 1.
class ScoreKind {
 public:
  static ScoreKind dot_product() { return ScoreKind(ScoreType::kDotProduct, 2.0); }
  static ScoreKind l1() { return ScoreKind(ScoreType::kL1, 1.0); }
  static ScoreKind squared_l2() { return ScoreKind(ScoreType::kSquaredL2, 2.0); }
  static ScoreKind lp(double p);  // throws ParameterError unless finite p >= 1

  ScoreType type() const { return type_; }
  double p() const { return p_; }
  bool distance_based() const { return type_ != ScoreType::kDotProduct; }
  std::string_view name() const;

  /// Inverse of name(): accepts "dot", "l1", "squared_l2", "lp".
  static ScoreKind parse(std::string_view name, double p_for_lp = 2.0);

 private:
  ScoreKind(ScoreType t, double p) : type_(t), p_(p) {}
  ScoreType type_;
  double p_;
};

/// One attention head's configuration. The mask, when present, is an
/// n_queries x n_keys matrix where nonzero means "query may attend here";
/// every query row must keep at least one admissible key.
struct AttentionSpec {
  ScoreKind kind = ScoreKind::dot_product();
  double lambda = 1.0;
  std::size_t d_k = 1;
  std::optional<Matrix> mask;
};

struct AttentionResult {
  Matrix output;  // n_queries x d_v
  Matrix alpha;   // row-stochastic n_queries x n_keys weights
};

/// Pairwise Manhattan distances: D_ij = sum_m |q_im - k_jm|. All entries are
/// nonnegative; D_ij = 0 iff the rows are identical.
Matrix l1_distance_matrix(const Matrix& q, const Matrix& k);

/// Pairwise Minkowski distances D_ij = (sum_m |q_im - k_jm|^p)^(1/p), p >= 1.
Matrix lp_distance_matrix(const Matrix& q, const Matrix& k, double p);

/// Pre-softmax scores S. DotProduct: S = Q K^T / sqrt(Dk). Distance kinds:
/// S = -lambda * D / sqrt(Dk), where D is the L1, squared-L2 or Lp distance
/// matrix. Masked-out entries are set to the most negative finite double so
/// the downstream softmax stays NaN-free.
Matrix score_matrix(const AttentionSpec& spec, const Matrix& q, const Matrix& k);

/// alpha = softmax_rows(score_matrix(spec, q, k)); output = alpha * v.
AttentionResult attention_forward(const AttentionSpec& spec, const Matrix& q,
                                  const Matrix& k, const Matrix& v);

/// Normalizes the rows of q and k to unit L2 norm, then compares dot-product
/// attention against squared-L2 attention with lambda = 1/2. Returns the
/// maximum absolute output deviation; the two paths agree below 1e-10 for all
/// finite inputs because the scores differ only by a per-row constant.
double dot_equivalence_check(const Matrix& q, const Matrix& k, const Matrix& v);

/// Per-dimension attention weight as a function of the query-key difference d:
/// Gaussian exp(-d^2 / (2 sqrt(Dk))) for DotProduct/SquaredL2, Laplacian
/// exp(-lambda |d| / sqrt(Dk)) for L1/Lp (a single-coordinate Lp distance is
/// |d|). Always in (0, 1] with weight 1 at d = 0.
double kernel_weight(const ScoreKind& kind, double lambda, std::size_t d_k, double d);

/// The lambda at which the Laplacian curve meets the Gaussian curve exactly
/// at the Gaussian's inflection point d* = Dk^(1/4): lambda* = Dk^(1/4) / 2.
double kernel_crossing_lambda(std::size_t d_k);

/// CSV dump of the decay curves, header "d,gaussian,laplacian_lambda_<l>..."
/// with steps+1 evenly spaced rows over [0, d_max].
std::string kernel_curve_csv(std::size_t d_k, std::span<const double> lambdas,
                             double d_max, std::size_t steps);

/// Standard multi-head completion: per-head slices of the d_model x d_model
/// projections, shared score spec, concatenated heads, output projection.
struct MultiHeadSpec {
  std::size_t d_model = 1;
  std::size_t heads = 1;
  AttentionSpec head_spec;  // head_spec.d_k must equal d_model / heads
  Matrix w_q, w_k, w_v, w_o;

  void validate() const;  // throws ConfigError
};

Matrix multi_head_forward(const MultiHeadSpec& mh, const Matrix& x);

}  // namespace ecoattn

#endif  // ECOATTN_ATTENTION_HPP_
