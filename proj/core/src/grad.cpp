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
#include "ecoattn/grad.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "ecoattn/errors.hpp"
#include "ecoattn/rng.hpp"

namespace ecoattn {

namespace {

double sign0(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace

Matrix softmax_rows_backward(const Matrix& alpha, const Matrix& d_alpha) {
  if (!alpha.same_shape(d_alpha)) {
    throw DimensionError("softmax_rows_backward: alpha " + alpha.shape_str() +
                         " vs upstream " + d_alpha.shape_str());
  }
  Matrix ds(alpha.rows(), alpha.cols());
  for (std::size_t i = 0; i < alpha.rows(); ++i) {
    double inner = 0.0;  // sum_j d_alpha_ij * alpha_ij
    for (std::size_t j = 0; j < alpha.cols(); ++j) {
      inner += d_alpha(i, j) * alpha(i, j);
    }
    for (std::size_t j = 0; j < alpha.cols(); ++j) {
      ds(i, j) = alpha(i, j) * (d_alpha(i, j) - inner);
    }
  }
  return ds;
}

AttentionGrads attention_backward(const AttentionSpec& spec, const Matrix& q,
                                  const Matrix& k, const Matrix& v,
                                  const Matrix& upstream) {
  if (upstream.rows() != q.rows() || upstream.cols() != v.cols()) {
    throw DimensionError("attention_backward: upstream " + upstream.shape_str() +
                         " does not match output shape");
  }
  const AttentionResult fwd = attention_forward(spec, q, k, v);
  const Matrix& alpha = fwd.alpha;

  AttentionGrads g;
  g.d_v = matmul(transpose(alpha), upstream);

  const Matrix d_alpha = matmul(upstream, transpose(v));
  const Matrix ds = softmax_rows_backward(alpha, d_alpha);

  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(spec.d_k));
  g.d_q = Matrix(q.rows(), q.cols());
  g.d_k = Matrix(k.rows(), k.cols());

  switch (spec.kind.type()) {
    case ScoreType::kDotProduct: {
      // S = Q K^T / sqrt(Dk)
      g.d_q = scale(matmul(ds, k), inv_sqrt_dk);
      g.d_k = scale(matmul(transpose(ds), q), inv_sqrt_dk);
      break;
    }
    case ScoreType::kL1: {
      const double c = -spec.lambda * inv_sqrt_dk;
      for (std::size_t i = 0; i < q.rows(); ++i) {
        for (std::size_t j = 0; j < k.rows(); ++j) {
          const double w = ds(i, j) * c;
          for (std::size_t m = 0; m < q.cols(); ++m) {
            const double s = sign0(q(i, m) - k(j, m));
            g.d_q(i, m) += w * s;
            g.d_k(j, m) -= w * s;
          }
        }
      }
      break;
    }
    case ScoreType::kSquaredL2: {
      const double c = -2.0 * spec.lambda * inv_sqrt_dk;
      for (std::size_t i = 0; i < q.rows(); ++i) {
        for (std::size_t j = 0; j < k.rows(); ++j) {
          const double w = ds(i, j) * c;
          for (std::size_t m = 0; m < q.cols(); ++m) {
            const double diff = q(i, m) - k(j, m);
            g.d_q(i, m) += w * diff;
            g.d_k(j, m) -= w * diff;
          }
        }
      }
      break;
    }
    case ScoreType::kLp: {
      // d D_p / d q_im = (D_p)^(1-p) |diff|^(p-1) sign(diff), zero when the
      // rows coincide (subgradient at the cusp).
      const double p = spec.kind.p();
      const double c = -spec.lambda * inv_sqrt_dk;
      const Matrix dist = lp_distance_matrix(q, k, p);
      for (std::size_t i = 0; i < q.rows(); ++i) {
        for (std::size_t j = 0; j < k.rows(); ++j) {
          const double w = ds(i, j) * c;
          const double d = dist(i, j);
          if (d == 0.0) continue;
          const double dpow = std::pow(d, 1.0 - p);
          for (std::size_t m = 0; m < q.cols(); ++m) {
            const double diff = q(i, m) - k(j, m);
            const double dd = dpow * std::pow(std::abs(diff), p - 1.0) * sign0(diff);
            g.d_q(i, m) += w * dd;
            g.d_k(j, m) -= w * dd;
          }
        }
      }
      break;
    }
  }
  return g;
}

FdReport finite_difference_check(const ScalarFn& f, std::vector<Matrix> inputs,
                                 const std::vector<Matrix>& analytic,
                                 const std::vector<std::string>& names,
                                 double step, const SkipFn& skip) {
  if (!(step >= 1e-7 && step <= 1e-3)) {
    throw ParameterError("finite_difference_check: step must lie in [1e-7, 1e-3]");
  }
  if (inputs.size() != analytic.size() || inputs.size() != names.size()) {
    throw DimensionError("finite_difference_check: inputs/analytic/names sizes differ");
  }
  FdReport report;
  report.step = step;
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    if (!inputs[t].same_shape(analytic[t])) {
      throw DimensionError("finite_difference_check: analytic gradient shape "
                           "mismatch for " + names[t]);
    }
    for (std::size_t r = 0; r < inputs[t].rows(); ++r) {
      for (std::size_t c = 0; c < inputs[t].cols(); ++c) {
        if (skip && skip(t, r, c)) {
          ++report.skipped_coordinates;
          continue;
        }
        const double saved = inputs[t](r, c);
        inputs[t](r, c) = saved + step;
        const double f_plus = f(inputs);
        inputs[t](r, c) = saved - step;
        const double f_minus = f(inputs);
        inputs[t](r, c) = saved;
        if (!std::isfinite(f_plus) || !std::isfinite(f_minus)) {
          throw OracleError("finite_difference_check: non-finite objective at " +
                            names[t] + "(" + std::to_string(r) + "," +
                            std::to_string(c) + ")");
        }
        const double fd = (f_plus - f_minus) / (2.0 * step);
        const double g = analytic[t](r, c);
        const double rel = std::abs(fd - g) / std::max(1.0, std::abs(g));
        ++report.checked_coordinates;
        if (rel > report.max_rel_err) {
          report.max_rel_err = rel;
          report.worst = {names[t], r, c};
        }
      }
    }
  }
  return report;
}

void nudge_from_kinks(Matrix& q, const Matrix& k, double tol) {
  if (tol <= 0.0) return;
  for (std::size_t i = 0; i < q.rows(); ++i) {
    for (std::size_t m = 0; m < q.cols(); ++m) {
      for (int attempt = 0; attempt < 100; ++attempt) {
        bool clear = true;
        for (std::size_t j = 0; j < k.rows(); ++j) {
          if (std::abs(q(i, m) - k(j, m)) < tol) {
            clear = false;
            break;
          }
        }
        if (clear) break;
        q(i, m) += 3.0 * tol;
        if (attempt == 99) {
          throw NumericError("nudge_from_kinks: could not move q(" +
                             std::to_string(i) + "," + std::to_string(m) +
                             ") away from key coordinates");
        }
      }
    }
  }
}

GradcheckResult gradcheck_attention(const AttentionSpec& spec, std::size_t n,
                                    std::uint64_t seed, double step,
                                    double kink_tol) {
  SplitMix64 rng(seed);
  Matrix q = rand_matrix(rng, n, spec.d_k, 1.0);
  Matrix k = rand_matrix(rng, n, spec.d_k, 1.0);
  Matrix v = rand_matrix(rng, n, spec.d_k, 1.0);
  Matrix upstream = rand_matrix(rng, n, spec.d_k, 1.0);

  const bool kinked = spec.kind.type() == ScoreType::kL1 ||
                      (spec.kind.type() == ScoreType::kLp && spec.kind.p() < 2.0);
  if (kinked) nudge_from_kinks(q, k, kink_tol);

  const AttentionGrads grads = attention_backward(spec, q, k, v, upstream);

  const ScalarFn loss = [&](const std::vector<Matrix>& in) {
    const AttentionResult r = attention_forward(spec, in[0], in[1], in[2]);
    double acc = 0.0;
    for (std::size_t i = 0; i < upstream.size(); ++i) {
      acc += upstream.data()[i] * r.output.data()[i];
    }
    return acc;
  };

  // Coordinates still within kink_tol of a tie are excluded: a two-sided
  // difference across the kink measures the wrong one-sided slope.
  SkipFn skip = nullptr;
  if (kinked) {
    skip = [&q, &k, kink_tol](std::size_t t, std::size_t r, std::size_t c) {
      if (t == 2) return false;  // v is smooth
      const Matrix& own = t == 0 ? q : k;
      const Matrix& other = t == 0 ? k : q;
      for (std::size_t j = 0; j < other.rows(); ++j) {
        if (std::abs(own(r, c) - other(j, c)) <= kink_tol) return true;
      }
      return false;
    };
  }

  GradcheckResult result;
  result.report = finite_difference_check(loss, {q, k, v},
                                          {grads.d_q, grads.d_k, grads.d_v},
                                          {"q", "k", "v"}, step, skip);
  result.kind = std::string(spec.kind.name());
  result.lambda = spec.lambda;
  result.n = n;
  result.d_k = spec.d_k;
  return result;
}

std::string gradcheck_json(const GradcheckResult& r) {
  nlohmann::json j{
      {"kind", r.kind},
      {"lambda", r.lambda},
      {"n", r.n},
      {"d_k", r.d_k},
      {"max_rel_err", r.report.max_rel_err},
      {"worst_coordinate",
       {{"tensor", r.report.worst.tensor},
        {"row", r.report.worst.row},
        {"col", r.report.worst.col}}},
      {"step", r.report.step},
      {"skipped_coordinates", r.report.skipped_coordinates}};
  return j.dump();
}

}  // namespace ecoattn
