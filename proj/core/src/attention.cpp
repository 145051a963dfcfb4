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
#include "ecoattn/attention.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "ecoattn/errors.hpp"

namespace ecoattn {

ScoreKind ScoreKind::lp(double p) {
  if (!std::isfinite(p) || p < 1.0) {
    throw ParameterError("ScoreKind::lp: p must be finite and >= 1, got " +
                         format_double(p));
  }
  return ScoreKind(ScoreType::kLp, p);
}

std::string_view ScoreKind::name() const {
  switch (type_) {
    case ScoreType::kDotProduct: return "dot";
    case ScoreType::kL1: return "l1";
    case ScoreType::kSquaredL2: return "squared_l2";
    case ScoreType::kLp: return "lp";
  }
  return "unknown";
}

ScoreKind ScoreKind::parse(std::string_view name, double p_for_lp) {
  if (name == "dot") return dot_product();
  if (name == "l1") return l1();
  if (name == "squared_l2") return squared_l2();
  if (name == "lp") return lp(p_for_lp);
  throw ParameterError("ScoreKind::parse: unknown kind '" + std::string(name) +
                       "' (expected dot|l1|squared_l2|lp)");
}

namespace {

void require_feature_match(const Matrix& q, const Matrix& k, const char* op) {
  if (q.cols() != k.cols()) {
    throw DimensionError(std::string(op) + ": feature dimensions disagree, q " +
                         q.shape_str() + " k " + k.shape_str());
  }
}

void validate_spec(const AttentionSpec& spec, const Matrix& q, const Matrix& k) {
  require_feature_match(q, k, "score_matrix");
  if (spec.d_k < 1) {
    throw ParameterError("AttentionSpec: d_k must be >= 1");
  }
  if (q.cols() != spec.d_k) {
    throw DimensionError("score_matrix: spec.d_k = " + std::to_string(spec.d_k) +
                         " but q has " + std::to_string(q.cols()) + " features");
  }
  if (!(spec.lambda >= 0.0)) {
    throw ParameterError("AttentionSpec: lambda must be >= 0");
  }
  if (spec.mask) {
    const Matrix& m = *spec.mask;
    if (m.rows() != q.rows() || m.cols() != k.rows()) {
      throw DimensionError("score_matrix: mask " + m.shape_str() +
                           " does not cover q rows x k rows");
    }
    for (std::size_t i = 0; i < m.rows(); ++i) {
      bool any = false;
      for (std::size_t j = 0; j < m.cols(); ++j) {
        if (m(i, j) != 0.0) {
          any = true;
          break;
        }
      }
      if (!any) {
        throw ConfigError("score_matrix: mask row " + std::to_string(i) +
                          " blocks every key");
      }
    }
  }
}

// Squared Euclidean distances without the sqrt/square round trip; this keeps
// the dot-product equivalence tight at the 1e-10 level.
Matrix squared_l2_distances(const Matrix& q, const Matrix& k) {
  Matrix d(q.rows(), k.rows());
  for (std::size_t i = 0; i < q.rows(); ++i) {
    for (std::size_t j = 0; j < k.rows(); ++j) {
      double acc = 0.0;
      for (std::size_t m = 0; m < q.cols(); ++m) {
        const double diff = q(i, m) - k(j, m);
        acc += diff * diff;
      }
      d(i, j) = acc;
    }
  }
  return d;
}

}  // namespace

Matrix l1_distance_matrix(const Matrix& q, const Matrix& k) {
  require_feature_match(q, k, "l1_distance_matrix");
  Matrix d(q.rows(), k.rows());
  for (std::size_t i = 0; i < q.rows(); ++i) {
    for (std::size_t j = 0; j < k.rows(); ++j) {
      double acc = 0.0;
      for (std::size_t m = 0; m < q.cols(); ++m) {
        acc += std::abs(q(i, m) - k(j, m));
      }
      d(i, j) = acc;
    }
  }
  return d;
}

Matrix lp_distance_matrix(const Matrix& q, const Matrix& k, double p) {
  if (!std::isfinite(p) || p < 1.0) {
    throw ParameterError("lp_distance_matrix: p must be finite and >= 1, got " +
                         format_double(p));
  }
  require_feature_match(q, k, "lp_distance_matrix");
  if (p == 1.0) return l1_distance_matrix(q, k);
  Matrix d(q.rows(), k.rows());
  for (std::size_t i = 0; i < q.rows(); ++i) {
    for (std::size_t j = 0; j < k.rows(); ++j) {
      double acc = 0.0;
      for (std::size_t m = 0; m < q.cols(); ++m) {
        acc += std::pow(std::abs(q(i, m) - k(j, m)), p);
      }
      d(i, j) = std::pow(acc, 1.0 / p);
    }
  }
  return d;
}

Matrix score_matrix(const AttentionSpec& spec, const Matrix& q, const Matrix& k) {
  validate_spec(spec, q, k);
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(spec.d_k));
  Matrix s;
  switch (spec.kind.type()) {
    case ScoreType::kDotProduct:
      s = matmul(q, transpose(k));
      for (double& v : s.data()) v *= inv_sqrt_dk;
      break;
    case ScoreType::kL1:
      s = l1_distance_matrix(q, k);
      for (double& v : s.data()) v *= -spec.lambda * inv_sqrt_dk;
      break;
    case ScoreType::kSquaredL2:
      s = squared_l2_distances(q, k);
      for (double& v : s.data()) v *= -spec.lambda * inv_sqrt_dk;
      break;
    case ScoreType::kLp:
      s = lp_distance_matrix(q, k, spec.kind.p());
      for (double& v : s.data()) v *= -spec.lambda * inv_sqrt_dk;
      break;
  }
  if (spec.mask) {
    // Most negative finite value, not -inf: max subtraction in the softmax
    // then yields exp of a hugely negative number (exactly 0), never NaN.
    const double blocked = std::numeric_limits<double>::lowest();
    const Matrix& m = *spec.mask;
    for (std::size_t i = 0; i < s.rows(); ++i) {
      for (std::size_t j = 0; j < s.cols(); ++j) {
        if (m(i, j) == 0.0) s(i, j) = blocked;
      }
    }
  }
  return s;
}

AttentionResult attention_forward(const AttentionSpec& spec, const Matrix& q,
                                  const Matrix& k, const Matrix& v) {
  if (k.rows() != v.rows()) {
    throw DimensionError("attention_forward: k " + k.shape_str() + " and v " +
                         v.shape_str() + " disagree on row count");
  }
  AttentionResult r;
  r.alpha = softmax_rows(score_matrix(spec, q, k));
  r.output = matmul(r.alpha, v);
  return r;
}

double dot_equivalence_check(const Matrix& q, const Matrix& k, const Matrix& v) {
  const Matrix qn = l2_normalize_rows(q);
  const Matrix kn = l2_normalize_rows(k);
  AttentionSpec dot_spec{ScoreKind::dot_product(), 1.0, q.cols(), std::nullopt};
  AttentionSpec l2_spec{ScoreKind::squared_l2(), 0.5, q.cols(), std::nullopt};
  const Matrix dot_out = attention_forward(dot_spec, qn, kn, v).output;
  const Matrix l2_out = attention_forward(l2_spec, qn, kn, v).output;
  return max_abs_diff(dot_out, l2_out);
}

double kernel_weight(const ScoreKind& kind, double lambda, std::size_t d_k,
                     double d) {
  const double sqrt_dk = std::sqrt(static_cast<double>(d_k));
  if (kind.distance_based() && kind.type() != ScoreType::kSquaredL2) {
    return std::exp(-lambda * std::abs(d) / sqrt_dk);
  }
  return std::exp(-d * d / (2.0 * sqrt_dk));
}

double kernel_crossing_lambda(std::size_t d_k) {
  return 0.5 * std::pow(static_cast<double>(d_k), 0.25);
}

std::string kernel_curve_csv(std::size_t d_k, std::span<const double> lambdas,
                             double d_max, std::size_t steps) {
  if (steps < 1 || !(d_max > 0.0)) {
    throw ParameterError("kernel_curve_csv: need steps >= 1 and d_max > 0");
  }
  std::ostringstream out;
  out << "d,gaussian";
  for (double l : lambdas) {
    std::string tag = format_double(l);
    out << ",laplacian_lambda_" << tag;
  }
  out << '\n';
  const ScoreKind gauss = ScoreKind::squared_l2();
  const ScoreKind lap = ScoreKind::l1();
  for (std::size_t s = 0; s <= steps; ++s) {
    const double d = d_max * static_cast<double>(s) / static_cast<double>(steps);
    out << format_double(d) << ',' << format_double(kernel_weight(gauss, 1.0, d_k, d));
    for (double l : lambdas) {
      out << ',' << format_double(kernel_weight(lap, l, d_k, d));
    }
    out << '\n';
  }
  return out.str();
}

void MultiHeadSpec::validate() const {
  if (heads < 1 || d_model < 1) {
    throw ConfigError("MultiHeadSpec: heads and d_model must be >= 1");
  }
  if (d_model % heads != 0) {
    throw ConfigError("MultiHeadSpec: d_model " + std::to_string(d_model) +
                      " not divisible by heads " + std::to_string(heads));
  }
  if (head_spec.d_k != d_model / heads) {
    throw ConfigError("MultiHeadSpec: head_spec.d_k " +
                      std::to_string(head_spec.d_k) + " != d_model / heads = " +
                      std::to_string(d_model / heads));
  }
  for (const Matrix* w : {&w_q, &w_k, &w_v, &w_o}) {
    if (w->rows() != d_model || w->cols() != d_model) {
      throw ConfigError("MultiHeadSpec: projection " + w->shape_str() +
                        " is not d_model x d_model");
    }
  }
}

namespace {

Matrix column_block(const Matrix& m, std::size_t first_col, std::size_t n_cols) {
  Matrix out(m.rows(), n_cols);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < n_cols; ++j) {
      out(i, j) = m(i, first_col + j);
    }
  }
  return out;
}

}  // namespace

Matrix multi_head_forward(const MultiHeadSpec& mh, const Matrix& x) {
  mh.validate();
  if (x.cols() != mh.d_model) {
    throw DimensionError("multi_head_forward: x " + x.shape_str() +
                         " does not match d_model " + std::to_string(mh.d_model));
  }
  const std::size_t d_head = mh.d_model / mh.heads;
  const Matrix q = matmul(x, mh.w_q);
  const Matrix k = matmul(x, mh.w_k);
  const Matrix v = matmul(x, mh.w_v);
  Matrix concat(x.rows(), mh.d_model);
  for (std::size_t h = 0; h < mh.heads; ++h) {
    const std::size_t off = h * d_head;
    const Matrix qh = column_block(q, off, d_head);
    const Matrix kh = column_block(k, off, d_head);
    const Matrix vh = column_block(v, off, d_head);
    const Matrix oh = attention_forward(mh.head_spec, qh, kh, vh).output;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      for (std::size_t j = 0; j < d_head; ++j) {
        concat(i, off + j) = oh(i, j);
      }
    }
  }
  return matmul(concat, mh.w_o);
}

}  // namespace ecoattn
