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
#include "ecoattn/sparse.hpp"

#include <algorithm>
#include <cmath>

#include "ecoattn/errors.hpp"

namespace ecoattn {

std::pair<std::size_t, std::size_t> WindowSpec::bounds(std::size_t t,
                                                       std::size_t n) const {
  const std::size_t half = window / 2;
  const std::size_t lo = t >= half ? t - half : 0;
  const std::size_t hi = std::min(n - 1, t + half);
  return {lo, hi};
}

void WindowSpec::validate(std::size_t n) const {
  if (window < 2 || window % 2 != 0) {
    throw ConfigError("WindowSpec: window must be even and >= 2, got " +
                      std::to_string(window));
  }
  for (std::size_t i = 0; i < global_indices.size(); ++i) {
    if (global_indices[i] >= n) {
      throw ConfigError("WindowSpec: global index " +
                        std::to_string(global_indices[i]) +
                        " outside sequence of length " + std::to_string(n));
    }
    if (i > 0 && global_indices[i] <= global_indices[i - 1]) {
      throw ConfigError("WindowSpec: global indices must be strictly ascending");
    }
  }
}

namespace {

void require_l1_unmasked(const AttentionSpec& spec, const char* op) {
  if (spec.kind.type() != ScoreType::kL1) {
    throw ConfigError(std::string(op) + ": defined for the l1 score kind only");
  }
  if (spec.mask.has_value()) {
    throw ConfigError(std::string(op) +
                      ": masks are not supported; the pattern is the mask");
  }
  if (!(spec.lambda >= 0.0)) {
    throw ParameterError(std::string(op) + ": lambda must be >= 0");
  }
}

// One softmax-weighted sum of value rows over an explicit key index list.
// Index order and the left-to-right reductions match the dense path exactly,
// so a window covering the whole sequence reproduces dense attention bit for
// bit. `out` accumulates (+=) so the windowed and global terms can share it.
template <typename IndexRange>
void accumulate_local_attention(const AttentionSpec& spec, const Matrix& q,
                                const Matrix& k, const Matrix& v, std::size_t t,
                                const IndexRange& indices, Matrix& out,
                                OpTally* tally) {
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(spec.d_k));
  const double score_scale = -spec.lambda * inv_sqrt_dk;
  std::vector<double> scores;
  scores.reserve(indices.size());
  for (std::size_t j : indices) {
    double acc = 0.0;
    for (std::size_t m = 0; m < q.cols(); ++m) {
      acc += std::abs(q(t, m) - k(j, m));
      if (tally) {
        ++tally->abs_diffs;
        ++tally->adds;
      }
    }
    scores.push_back(acc * score_scale);
  }
  double mx = scores[0];
  for (double s : scores) mx = std::max(mx, s);
  double sum = 0.0;
  for (double& s : scores) {
    s = std::exp(s - mx);
    sum += s;
  }
  std::size_t pos = 0;
  for (std::size_t j : indices) {
    const double w = scores[pos++] / sum;
    for (std::size_t c = 0; c < v.cols(); ++c) {
      out(t, c) += w * v(j, c);
    }
  }
}

struct IotaRange {
  std::size_t lo, hi;  // inclusive
  struct Iter {
    std::size_t v;
    std::size_t operator*() const { return v; }
    Iter& operator++() { ++v; return *this; }
    bool operator!=(const Iter& o) const { return v != o.v; }
  };
  Iter begin() const { return {lo}; }
  Iter end() const { return {hi + 1}; }
  std::size_t size() const { return hi - lo + 1; }
};

}  // namespace

Matrix longformer_l1_forward(const AttentionSpec& spec, const WindowSpec& win,
                             const Matrix& q, const Matrix& k, const Matrix& v,
                             OpTally* tally) {
  require_l1_unmasked(spec, "longformer_l1_forward");
  const std::size_t n = q.rows();
  if (k.rows() != n || v.rows() != n) {
    throw DimensionError("longformer_l1_forward: q/k/v row counts disagree");
  }
  if (q.cols() != k.cols() || q.cols() != spec.d_k) {
    throw DimensionError("longformer_l1_forward: feature dims disagree with d_k");
  }
  win.validate(n);

  Matrix out(n, v.cols());
  for (std::size_t t = 0; t < n; ++t) {
    const auto [lo, hi] = win.bounds(t, n);
    accumulate_local_attention(spec, q, k, v, t, IotaRange{lo, hi}, out, tally);
    if (!win.global_indices.empty()) {
      accumulate_local_attention(spec, q, k, v, t, win.global_indices, out, tally);
    }
  }
  return out;
}

ProjectionSpec ProjectionSpec::identity(std::size_t n) {
  return ProjectionSpec{n, Matrix::identity(n), Matrix::identity(n)};
}

void ProjectionSpec::validate(std::size_t n) const {
  if (k_dim < 1) {
    throw ConfigError("ProjectionSpec: k_dim must be >= 1");
  }
  for (const Matrix* e : {&e_k, &e_v}) {
    if (e->rows() != k_dim || e->cols() != n) {
      throw DimensionError("ProjectionSpec: projection " + e->shape_str() +
                           " is not k_dim x N = (" + std::to_string(k_dim) +
                           " x " + std::to_string(n) + ")");
    }
  }
}

Matrix linformer_l1_forward(const AttentionSpec& spec, const ProjectionSpec& proj,
                            const Matrix& q, const Matrix& k, const Matrix& v) {
  require_l1_unmasked(spec, "linformer_l1_forward");
  if (k.rows() != v.rows()) {
    throw DimensionError("linformer_l1_forward: k and v row counts disagree");
  }
  proj.validate(k.rows());
  const Matrix k_compressed = matmul(proj.e_k, k);
  const Matrix v_compressed = matmul(proj.e_v, v);
  return attention_forward(spec, q, k_compressed, v_compressed).output;
}

}  // namespace ecoattn
