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
#include "ecoattn/opcount.hpp"

#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ecoattn/errors.hpp"

namespace ecoattn {

namespace {

void require_countable(const ScoreKind& kind, const char* op) {
  if (kind.type() != ScoreType::kDotProduct && kind.type() != ScoreType::kL1) {
    throw ParameterError(std::string(op) +
                         ": op accounting is defined for dot and l1 scores only");
  }
}

}  // namespace

OpTally score_op_counts(const ScoreKind& kind, std::size_t n_q, std::size_t n_k,
                        std::size_t d_k) {
  require_countable(kind, "score_op_counts");
  if (n_q < 1 || n_k < 1 || d_k < 1) {
    throw ParameterError("score_op_counts: all counts must be >= 1");
  }
  const std::uint64_t terms = static_cast<std::uint64_t>(n_q) * n_k * d_k;
  OpTally t;
  t.adds = terms;
  if (kind.type() == ScoreType::kDotProduct) {
    t.mults = terms;
  } else {
    t.abs_diffs = terms;
  }
  return t;
}

OpTally full_layer_op_counts(const ScoreKind& kind, std::size_t n,
                             std::size_t d_k) {
  OpTally t = score_op_counts(kind, n, n, d_k);
  const std::uint64_t nn = static_cast<std::uint64_t>(n) * n;
  const std::uint64_t proj = static_cast<std::uint64_t>(n) * d_k * d_k;
  // Q, K, V projections: d_model = d_k, one multiply-accumulate per term.
  t.mults += 3 * proj;
  t.adds += 3 * proj;
  // Softmax over each n-entry row: subtract max, exponentiate, accumulate,
  // divide, per entry.
  t.adds += 2 * nn;
  t.exps += nn;
  t.divs += nn;
  // alpha * V stays a real matrix product in both arms.
  t.mults += nn * d_k;
  t.adds += nn * d_k;
  return t;
}

Matrix counted_score_matrix(const AttentionSpec& spec, const Matrix& q,
                            const Matrix& k, OpTally& tally) {
  require_countable(spec.kind, "counted_score_matrix");
  if (q.cols() != k.cols() || q.cols() != spec.d_k) {
    throw DimensionError("counted_score_matrix: q " + q.shape_str() + " k " +
                         k.shape_str() + " d_k " + std::to_string(spec.d_k));
  }
  const bool dot = spec.kind.type() == ScoreType::kDotProduct;
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(spec.d_k));
  Matrix s(q.rows(), k.rows());
  for (std::size_t i = 0; i < q.rows(); ++i) {
    for (std::size_t j = 0; j < k.rows(); ++j) {
      double acc = 0.0;
      for (std::size_t m = 0; m < q.cols(); ++m) {
        double term;
        if (dot) {
          term = q(i, m) * k(j, m);
          ++tally.mults;
        } else {
          term = std::abs(q(i, m) - k(j, m));
          ++tally.abs_diffs;
        }
        acc += term;
        ++tally.adds;
      }
      // The lambda / sqrt(Dk) scaling is outside the counted scope.
      s(i, j) = dot ? acc * inv_sqrt_dk : acc * (-spec.lambda * inv_sqrt_dk);
    }
  }
  return s;
}

double energy_estimate(const OpTally& tally, const EnergyModel& model) {
  return static_cast<double>(tally.mults) * model.pj_mult +
         static_cast<double>(tally.adds) * model.pj_add +
         static_cast<double>(tally.abs_diffs) * model.pj_abs_diff +
         static_cast<double>(tally.exps) * model.pj_exp +
         static_cast<double>(tally.divs) * model.pj_div;
}

ReductionReport reduction_report(std::size_t n, std::size_t d_k,
                                 const EnergyModel& model, bool full_layer) {
  ReductionReport r;
  r.n = n;
  r.d_k = d_k;
  r.full_layer = full_layer;
  if (full_layer) {
    r.dot = full_layer_op_counts(ScoreKind::dot_product(), n, d_k);
    r.l1 = full_layer_op_counts(ScoreKind::l1(), n, d_k);
  } else {
    r.dot = score_op_counts(ScoreKind::dot_product(), n, n, d_k);
    r.l1 = score_op_counts(ScoreKind::l1(), n, n, d_k);
  }
  r.dot_pj = energy_estimate(r.dot, model);
  r.l1_pj = energy_estimate(r.l1, model);
  if (r.dot_pj == 0.0) {
    throw NumericError("reduction_report: degenerate model, dot energy is zero");
  }
  r.reduction_fraction = 1.0 - r.l1_pj / r.dot_pj;
  if (model.pj_add == 0.0) {
    throw NumericError("reduction_report: degenerate model, pj_add is zero");
  }
  r.mult_add_ratio = model.pj_mult / model.pj_add;
  return r;
}

namespace {

nlohmann::json tally_json(const OpTally& t) {
  return {{"mults", t.mults},
          {"adds", t.adds},
          {"abs_diffs", t.abs_diffs},
          {"exps", t.exps},
          {"divs", t.divs}};
}

}  // namespace

std::string reduction_report_json(const ReductionReport& r) {
  nlohmann::json j{{"n", r.n},
                   {"d_k", r.d_k},
                   {"full_layer", r.full_layer},
                   {"dot", tally_json(r.dot)},
                   {"l1", tally_json(r.l1)},
                   {"dot_pj", r.dot_pj},
                   {"l1_pj", r.l1_pj},
                   {"reduction_fraction", r.reduction_fraction},
                   {"mult_add_ratio", r.mult_add_ratio}};
  return j.dump();
}

std::string reduction_sweep_csv(std::span<const std::size_t> ns,
                                std::span<const std::size_t> dks,
                                const EnergyModel& model, bool full_layer) {
  std::ostringstream out;
  out << "n,d_k,dot_pj,l1_pj,reduction_fraction,mult_add_ratio\n";
  for (std::size_t n : ns) {
    for (std::size_t dk : dks) {
      const ReductionReport r = reduction_report(n, dk, model, full_layer);
      out << n << ',' << dk << ',' << format_double(r.dot_pj) << ','
          << format_double(r.l1_pj) << ',' << format_double(r.reduction_fraction)
          << ',' << format_double(r.mult_add_ratio) << '\n';
    }
  }
  return out.str();
}

}  // namespace ecoattn
