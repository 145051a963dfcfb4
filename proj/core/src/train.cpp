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
#include "ecoattn/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ecoattn/errors.hpp"
#include "ecoattn/grad.hpp"
#include "ecoattn/rng.hpp"

namespace ecoattn {

// ---------------------------------------------------------------------------
// Synthetic tasks
// ---------------------------------------------------------------------------

std::size_t needle_label(const std::vector<std::size_t>& tokens, std::size_t vocab) {
  const std::size_t sentinel = vocab - 1;
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
    if (tokens[i] == sentinel) return tokens[i + 1];
  }
  throw ConfigError("needle_label: no sentinel found before the last position");
}

std::size_t majority_label(const std::vector<std::size_t>& tokens) {
  if (tokens.empty()) {
    throw ConfigError("majority_label: empty sequence");
  }
  const std::size_t top = *std::max_element(tokens.begin(), tokens.end());
  std::vector<std::size_t> counts(top + 1, 0);
  for (std::size_t t : tokens) ++counts[t];
  std::size_t best = 0;
  for (std::size_t id = 1; id <= top; ++id) {
    if (counts[id] > counts[best]) best = id;  // strict: ties keep the lower id
  }
  return best;
}

namespace {

void validate_task(const SyntheticTask& task) {
  if (task.seq_len < 2 || task.classes < 2) {
    throw ConfigError("SyntheticTask: need seq_len >= 2 and classes >= 2");
  }
  if (task.classes > task.vocab) {
    throw ConfigError("SyntheticTask: classes " + std::to_string(task.classes) +
                      " exceed vocab " + std::to_string(task.vocab));
  }
  if (task.kind == TaskKind::kNeedleRetrieval && task.classes + 2 > task.vocab) {
    throw ConfigError("SyntheticTask: needle retrieval needs classes + 2 <= vocab "
                      "(one sentinel id and at least one filler id)");
  }
}

Sample make_needle_sample(const SyntheticTask& task, std::size_t label,
                          SplitMix64& rng) {
  const std::size_t sentinel = task.vocab - 1;
  const std::size_t n_fillers = sentinel - task.classes;  // ids [classes, vocab-1)
  std::vector<std::size_t> tokens(task.seq_len);
  for (std::size_t i = 0; i < task.seq_len; ++i) {
    tokens[i] = task.classes + rng.next_below(n_fillers);
  }
  const std::size_t pos = rng.next_below(task.seq_len - 1);
  tokens[pos] = sentinel;
  tokens[pos + 1] = label;
  return {std::move(tokens), label};
}

Sample make_majority_sample(const SyntheticTask& task, std::size_t label,
                            SplitMix64& rng) {
  std::vector<std::size_t> tokens(task.seq_len);
  for (std::size_t i = 0; i < task.seq_len; ++i) {
    // Any id except the label; the planted majority below stays strict.
    std::size_t t = rng.next_below(task.vocab - 1);
    if (t >= label) ++t;
    tokens[i] = t;
  }
  // Plant label at seq_len/2 + 1 distinct positions.
  const std::size_t majority = task.seq_len / 2 + 1;
  std::vector<std::size_t> order(task.seq_len);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = 0; i + 1 < order.size(); ++i) {  // Fisher-Yates
    const std::size_t j = i + rng.next_below(order.size() - i);
    std::swap(order[i], order[j]);
  }
  for (std::size_t i = 0; i < majority; ++i) tokens[order[i]] = label;
  return {std::move(tokens), label};
}

}  // namespace

Dataset generate_task(const SyntheticTask& task, std::size_t n_samples) {
  if (n_samples < 1) {
    throw ConfigError("generate_task: n_samples must be >= 1");
  }
  validate_task(task);
  SplitMix64 rng(task.seed);
  Dataset data;
  data.reserve(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const std::size_t label = i % task.classes;  // balanced within +-1
    data.push_back(task.kind == TaskKind::kNeedleRetrieval
                       ? make_needle_sample(task, label, rng)
                       : make_majority_sample(task, label, rng));
  }
  // Deterministic shuffle so labels are not presented round robin.
  for (std::size_t i = 0; i + 1 < data.size(); ++i) {
    const std::size_t j = i + rng.next_below(data.size() - i);
    std::swap(data[i], data[j]);
  }
  return data;
}

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

void TrainConfig::validate() const {
  if (layers < 1 || heads < 1 || d_model < 1 || ffn_dim < 1 || seq_len < 1 ||
      vocab < 2 || classes < 2 || epochs < 1 || batch < 1 || train_samples < 1 ||
      eval_samples < 1) {
    throw ConfigError("TrainConfig: all counts must be >= 1 (vocab/classes >= 2)");
  }
  // lr == 0 is allowed as a no-learning control.
  if (!(lr >= 0.0)) {
    throw ConfigError("TrainConfig: lr must be nonnegative");
  }
  if (d_model % heads != 0) {
    throw ConfigError("TrainConfig: d_model " + std::to_string(d_model) +
                      " not divisible by heads " + std::to_string(heads));
  }
  if (attention.d_k != d_model / heads) {
    throw ConfigError("TrainConfig: attention.d_k " + std::to_string(attention.d_k) +
                      " != d_model / heads = " + std::to_string(d_model / heads));
  }
}

namespace {

constexpr double kLnEps = 1e-5;

struct LayerParams {
  Matrix ln1_g, ln1_b;
  Matrix w_q, w_k, w_v, w_o;
  Matrix ln2_g, ln2_b;
  Matrix w1, b1, w2, b2;
};

struct ModelParams {
  Matrix embed;
  std::vector<LayerParams> layers;
  Matrix w_cls, b_cls;

  std::vector<Matrix*> all() {
    std::vector<Matrix*> p{&embed};
    for (LayerParams& l : layers) {
      for (Matrix* m : {&l.ln1_g, &l.ln1_b, &l.w_q, &l.w_k, &l.w_v, &l.w_o,
                        &l.ln2_g, &l.ln2_b, &l.w1, &l.b1, &l.w2, &l.b2}) {
        p.push_back(m);
      }
    }
    p.push_back(&w_cls);
    p.push_back(&b_cls);
    return p;
  }
};

// Draw order is fixed and independent of the attention kind: the A/B arms
// start from identical weights.
ModelParams init_params(const TrainConfig& cfg) {
  SplitMix64 rng(cfg.seed);
  const double d = static_cast<double>(cfg.d_model);
  ModelParams p;
  p.embed = rand_matrix(rng, cfg.vocab, cfg.d_model, 0.5);
  p.layers.resize(cfg.layers);
  for (LayerParams& l : p.layers) {
    l.ln1_g = Matrix(1, cfg.d_model, 1.0);
    l.ln1_b = Matrix(1, cfg.d_model, 0.0);
    l.w_q = rand_matrix(rng, cfg.d_model, cfg.d_model, 1.0 / std::sqrt(d));
    l.w_k = rand_matrix(rng, cfg.d_model, cfg.d_model, 1.0 / std::sqrt(d));
    l.w_v = rand_matrix(rng, cfg.d_model, cfg.d_model, 1.0 / std::sqrt(d));
    l.w_o = rand_matrix(rng, cfg.d_model, cfg.d_model, 1.0 / std::sqrt(d));
    l.ln2_g = Matrix(1, cfg.d_model, 1.0);
    l.ln2_b = Matrix(1, cfg.d_model, 0.0);
    l.w1 = rand_matrix(rng, cfg.d_model, cfg.ffn_dim, 1.0 / std::sqrt(d));
    l.b1 = Matrix(1, cfg.ffn_dim, 0.0);
    l.w2 = rand_matrix(rng, cfg.ffn_dim, cfg.d_model,
                       1.0 / std::sqrt(static_cast<double>(cfg.ffn_dim)));
    l.b2 = Matrix(1, cfg.d_model, 0.0);
  }
  p.w_cls = rand_matrix(rng, cfg.d_model, cfg.classes, 1.0 / std::sqrt(d));
  p.b_cls = Matrix(1, cfg.classes, 0.0);
  return p;
}

ModelParams zeros_like(const ModelParams& p) {
  ModelParams z = p;
  std::vector<Matrix*> ms = z.all();
  for (Matrix* m : ms) {
    std::fill(m->data().begin(), m->data().end(), 0.0);
  }
  return z;
}

Matrix positional_encoding(std::size_t seq_len, std::size_t d_model) {
  Matrix pe(seq_len, d_model);
  for (std::size_t pos = 0; pos < seq_len; ++pos) {
    for (std::size_t i = 0; i < d_model; ++i) {
      const double exponent = static_cast<double>(2 * (i / 2)) /
                              static_cast<double>(d_model);
      const double angle = static_cast<double>(pos) / std::pow(10000.0, exponent);
      pe(pos, i) = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  }
  return pe;
}

struct LnCache {
  Matrix x_hat;             // normalized input
  std::vector<double> inv;  // 1 / sqrt(var + eps) per row
};

Matrix layer_norm(const Matrix& x, const Matrix& gain, const Matrix& bias,
                  LnCache& cache) {
  const std::size_t n = x.rows(), d = x.cols();
  cache.x_hat = Matrix(n, d);
  cache.inv.assign(n, 0.0);
  Matrix y(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    double mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) mean += x(i, j);
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double c = x(i, j) - mean;
      var += c * c;
    }
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + kLnEps);
    cache.inv[i] = inv;
    for (std::size_t j = 0; j < d; ++j) {
      const double xh = (x(i, j) - mean) * inv;
      cache.x_hat(i, j) = xh;
      y(i, j) = gain(0, j) * xh + bias(0, j);
    }
  }
  return y;
}

Matrix layer_norm_backward(const Matrix& dy, const Matrix& gain,
                           const LnCache& cache, Matrix& d_gain, Matrix& d_bias) {
  const std::size_t n = dy.rows(), d = dy.cols();
  Matrix dx(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    double mean_dxhat = 0.0;
    double mean_dxhat_xhat = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double dxh = dy(i, j) * gain(0, j);
      mean_dxhat += dxh;
      mean_dxhat_xhat += dxh * cache.x_hat(i, j);
      d_gain(0, j) += dy(i, j) * cache.x_hat(i, j);
      d_bias(0, j) += dy(i, j);
    }
    mean_dxhat /= static_cast<double>(d);
    mean_dxhat_xhat /= static_cast<double>(d);
    for (std::size_t j = 0; j < d; ++j) {
      const double dxh = dy(i, j) * gain(0, j);
      dx(i, j) = cache.inv[i] *
                 (dxh - mean_dxhat - cache.x_hat(i, j) * mean_dxhat_xhat);
    }
  }
  return dx;
}

constexpr double kGeluA = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluB = 0.044715;

double gelu(double u) {
  return 0.5 * u * (1.0 + std::tanh(kGeluA * (u + kGeluB * u * u * u)));
}

double gelu_grad(double u) {
  const double t = std::tanh(kGeluA * (u + kGeluB * u * u * u));
  return 0.5 * (1.0 + t) +
         0.5 * u * (1.0 - t * t) * kGeluA * (1.0 + 3.0 * kGeluB * u * u);
}

Matrix add_row_bias(const Matrix& x, const Matrix& bias) {
  Matrix y = x;
  for (std::size_t i = 0; i < y.rows(); ++i) {
    for (std::size_t j = 0; j < y.cols(); ++j) y(i, j) += bias(0, j);
  }
  return y;
}

struct LayerCache {
  LnCache ln1, ln2;
  Matrix ln1_out;
  Matrix q, k, v;                  // full-width projections
  std::vector<Matrix> head_q, head_k, head_v;
  Matrix concat;                   // concatenated head outputs
  Matrix attn_in;                  // residual stream entering the block
  Matrix mid;                      // stream after the attention residual
  Matrix ln2_out;
  Matrix ffn_pre;                  // ln2_out * w1 + b1
  Matrix ffn_act;                  // gelu(ffn_pre)
};

struct ForwardCache {
  Matrix x0;  // embedding + positional encoding
  std::vector<LayerCache> layers;
  Matrix final_stream;
  Matrix pooled;      // 1 x d
  Matrix probs;       // 1 x classes
};

Matrix column_block(const Matrix& m, std::size_t first_col, std::size_t n_cols) {
  Matrix out(m.rows(), n_cols);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < n_cols; ++j) out(i, j) = m(i, first_col + j);
  }
  return out;
}

struct Workspace {
  const TrainConfig* cfg = nullptr;
  const ModelParams* params = nullptr;
  Matrix pe;
};

// Returns the cross-entropy loss for one sample; fills the cache for backward.
double forward_sample(const Workspace& ws, const Sample& sample,
                      ForwardCache& cache, OpTally& tally) {
  const TrainConfig& cfg = *ws.cfg;
  const ModelParams& p = *ws.params;
  const std::size_t L = cfg.seq_len, d = cfg.d_model;
  const std::size_t d_head = d / cfg.heads;

  cache.x0 = Matrix(L, d);
  for (std::size_t t = 0; t < L; ++t) {
    const std::size_t tok = sample.tokens[t];
    for (std::size_t j = 0; j < d; ++j) {
      cache.x0(t, j) = p.embed(tok, j) + ws.pe(t, j);
    }
  }

  Matrix x = cache.x0;
  cache.layers.assign(cfg.layers, LayerCache{});
  for (std::size_t li = 0; li < cfg.layers; ++li) {
    LayerCache& lc = cache.layers[li];
    const LayerParams& lp = p.layers[li];
    lc.attn_in = x;
    lc.ln1_out = layer_norm(x, lp.ln1_g, lp.ln1_b, lc.ln1);
    lc.q = matmul(lc.ln1_out, lp.w_q);
    lc.k = matmul(lc.ln1_out, lp.w_k);
    lc.v = matmul(lc.ln1_out, lp.w_v);
    lc.head_q.clear();
    lc.head_k.clear();
    lc.head_v.clear();
    lc.concat = Matrix(L, d);
    for (std::size_t h = 0; h < cfg.heads; ++h) {
      const std::size_t off = h * d_head;
      lc.head_q.push_back(column_block(lc.q, off, d_head));
      lc.head_k.push_back(column_block(lc.k, off, d_head));
      lc.head_v.push_back(column_block(lc.v, off, d_head));
      const AttentionResult r = attention_forward(
          cfg.attention, lc.head_q[h], lc.head_k[h], lc.head_v[h]);
      // Accounting covers the dot/l1 comparison; other kinds go untallied.
      const ScoreType st = cfg.attention.kind.type();
      if (st == ScoreType::kDotProduct || st == ScoreType::kL1) {
        tally += score_op_counts(cfg.attention.kind, L, L, d_head);
      }
      for (std::size_t i = 0; i < L; ++i) {
        for (std::size_t j = 0; j < d_head; ++j) {
          lc.concat(i, off + j) = r.output(i, j);
        }
      }
    }
    x = add(x, matmul(lc.concat, lp.w_o));
    lc.mid = x;
    lc.ln2_out = layer_norm(x, lp.ln2_g, lp.ln2_b, lc.ln2);
    lc.ffn_pre = add_row_bias(matmul(lc.ln2_out, lp.w1), lp.b1);
    lc.ffn_act = lc.ffn_pre;
    for (double& u : lc.ffn_act.data()) u = gelu(u);
    x = add(x, add_row_bias(matmul(lc.ffn_act, lp.w2), lp.b2));
  }
  cache.final_stream = x;

  cache.pooled = Matrix(1, d);
  for (std::size_t t = 0; t < L; ++t) {
    for (std::size_t j = 0; j < d; ++j) cache.pooled(0, j) += x(t, j);
  }
  for (std::size_t j = 0; j < d; ++j) cache.pooled(0, j) /= static_cast<double>(L);

  const Matrix logits = add_row_bias(matmul(cache.pooled, p.w_cls), p.b_cls);
  cache.probs = softmax_rows(logits);
  const double pl = cache.probs(0, sample.label);
  return -std::log(std::max(pl, 1e-300));
}

std::size_t predict_from_probs(const Matrix& probs) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < probs.cols(); ++j) {
    if (probs(0, j) > probs(0, best)) best = j;
  }
  return best;
}

void backward_sample(const Workspace& ws, const Sample& sample,
                     const ForwardCache& cache, ModelParams& grads) {
  const TrainConfig& cfg = *ws.cfg;
  const ModelParams& p = *ws.params;
  const std::size_t L = cfg.seq_len, d = cfg.d_model;
  const std::size_t d_head = d / cfg.heads;

  Matrix d_logits = cache.probs;
  d_logits(0, sample.label) -= 1.0;

  // Classifier.
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t c = 0; c < cfg.classes; ++c) {
      grads.w_cls(j, c) += cache.pooled(0, j) * d_logits(0, c);
    }
  }
  for (std::size_t c = 0; c < cfg.classes; ++c) grads.b_cls(0, c) += d_logits(0, c);
  Matrix d_pooled = matmul(d_logits, transpose(p.w_cls));

  // Mean pooling.
  Matrix dx(L, d);
  for (std::size_t t = 0; t < L; ++t) {
    for (std::size_t j = 0; j < d; ++j) {
      dx(t, j) = d_pooled(0, j) / static_cast<double>(L);
    }
  }

  for (std::size_t li = cfg.layers; li-- > 0;) {
    const LayerCache& lc = cache.layers[li];
    const LayerParams& lp = p.layers[li];
    LayerParams& lg = grads.layers[li];

    // FFN residual: x_out = mid + gelu(ln2(mid)) w2 + b2.
    Matrix d_ffn_out = dx;  // gradient of the FFN branch output
    for (std::size_t i = 0; i < L; ++i) {
      for (std::size_t j = 0; j < d; ++j) lg.b2(0, j) += d_ffn_out(i, j);
    }
    Matrix d_act = matmul(d_ffn_out, transpose(lp.w2));
    {
      Matrix w2_grad = matmul(transpose(lc.ffn_act), d_ffn_out);
      for (std::size_t i = 0; i < w2_grad.size(); ++i) {
        lg.w2.data()[i] += w2_grad.data()[i];
      }
    }
    Matrix d_pre = d_act;
    for (std::size_t i = 0; i < d_pre.size(); ++i) {
      d_pre.data()[i] *= gelu_grad(lc.ffn_pre.data()[i]);
    }
    for (std::size_t i = 0; i < L; ++i) {
      for (std::size_t j = 0; j < cfg.ffn_dim; ++j) lg.b1(0, j) += d_pre(i, j);
    }
    {
      Matrix w1_grad = matmul(transpose(lc.ln2_out), d_pre);
      for (std::size_t i = 0; i < w1_grad.size(); ++i) {
        lg.w1.data()[i] += w1_grad.data()[i];
      }
    }
    Matrix d_ln2_out = matmul(d_pre, transpose(lp.w1));
    Matrix d_mid = layer_norm_backward(d_ln2_out, lp.ln2_g, lc.ln2, lg.ln2_g,
                                       lg.ln2_b);
    // Residual join.
    for (std::size_t i = 0; i < d_mid.size(); ++i) {
      d_mid.data()[i] += dx.data()[i];
    }

    // Attention residual: mid = attn_in + concat w_o.
    Matrix d_attn_out = d_mid;
    {
      Matrix wo_grad = matmul(transpose(lc.concat), d_attn_out);
      for (std::size_t i = 0; i < wo_grad.size(); ++i) {
        lg.w_o.data()[i] += wo_grad.data()[i];
      }
    }
    Matrix d_concat = matmul(d_attn_out, transpose(lp.w_o));

    Matrix d_q_full(L, d), d_k_full(L, d), d_v_full(L, d);
    for (std::size_t h = 0; h < cfg.heads; ++h) {
      const std::size_t off = h * d_head;
      const Matrix up_h = column_block(d_concat, off, d_head);
      const AttentionGrads hg = attention_backward(
          cfg.attention, lc.head_q[h], lc.head_k[h], lc.head_v[h], up_h);
      for (std::size_t i = 0; i < L; ++i) {
        for (std::size_t j = 0; j < d_head; ++j) {
          d_q_full(i, off + j) = hg.d_q(i, j);
          d_k_full(i, off + j) = hg.d_k(i, j);
          d_v_full(i, off + j) = hg.d_v(i, j);
        }
      }
    }
    {
      Matrix wq_grad = matmul(transpose(lc.ln1_out), d_q_full);
      Matrix wk_grad = matmul(transpose(lc.ln1_out), d_k_full);
      Matrix wv_grad = matmul(transpose(lc.ln1_out), d_v_full);
      for (std::size_t i = 0; i < wq_grad.size(); ++i) {
        lg.w_q.data()[i] += wq_grad.data()[i];
        lg.w_k.data()[i] += wk_grad.data()[i];
        lg.w_v.data()[i] += wv_grad.data()[i];
      }
    }
    Matrix d_ln1_out = matmul(d_q_full, transpose(lp.w_q));
    {
      const Matrix via_k = matmul(d_k_full, transpose(lp.w_k));
      const Matrix via_v = matmul(d_v_full, transpose(lp.w_v));
      for (std::size_t i = 0; i < d_ln1_out.size(); ++i) {
        d_ln1_out.data()[i] += via_k.data()[i] + via_v.data()[i];
      }
    }
    Matrix d_attn_in = layer_norm_backward(d_ln1_out, lp.ln1_g, lc.ln1, lg.ln1_g,
                                           lg.ln1_b);
    for (std::size_t i = 0; i < d_attn_in.size(); ++i) {
      d_attn_in.data()[i] += d_mid.data()[i];
    }
    dx = std::move(d_attn_in);
  }

  // Embedding scatter; the positional term is constant.
  for (std::size_t t = 0; t < L; ++t) {
    const std::size_t tok = sample.tokens[t];
    for (std::size_t j = 0; j < d; ++j) {
      grads.embed(tok, j) += dx(t, j);
    }
  }
}

double evaluate(const Workspace& ws, const Dataset& data, OpTally& tally) {
  std::size_t correct = 0;
  ForwardCache cache;
  for (const Sample& s : data) {
    forward_sample(ws, s, cache, tally);
    if (predict_from_probs(cache.probs) == s.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace

double trainer_fd_probe(const TrainConfig& config, const SyntheticTask& task,
                        std::size_t n_samples, std::size_t n_probes,
                        double step) {
  config.validate();
  if (!(step >= 1e-7 && step <= 1e-3)) {
    throw ParameterError("trainer_fd_probe: step must lie in [1e-7, 1e-3]");
  }
  const Dataset data = generate_task(task, n_samples);
  ModelParams params = init_params(config);
  const Workspace ws{&config, &params,
                     positional_encoding(config.seq_len, config.d_model)};

  OpTally scratch;
  ForwardCache cache;
  const auto mean_loss = [&]() {
    double acc = 0.0;
    for (const Sample& s : data) acc += forward_sample(ws, s, cache, scratch);
    return acc / static_cast<double>(data.size());
  };

  ModelParams grads = zeros_like(params);
  for (const Sample& s : data) {
    forward_sample(ws, s, cache, scratch);
    backward_sample(ws, s, cache, grads);
  }
  const double inv_n = 1.0 / static_cast<double>(data.size());

  std::vector<Matrix*> ps = params.all();
  std::vector<Matrix*> gs = grads.all();
  SplitMix64 pick(config.seed ^ 0x5FD91CBC);
  double worst = 0.0;
  for (std::size_t probe = 0; probe < n_probes; ++probe) {
    const std::size_t m = pick.next_below(ps.size());
    const std::size_t i = pick.next_below(ps[m]->size());
    double& coord = ps[m]->data()[i];
    const double saved = coord;
    coord = saved + step;
    const double up = mean_loss();
    coord = saved - step;
    const double down = mean_loss();
    coord = saved;
    const double fd = (up - down) / (2.0 * step);
    const double g = gs[m]->data()[i] * inv_n;
    worst = std::max(worst, std::abs(fd - g) / std::max(1.0, std::abs(g)));
  }
  return worst;
}

double initial_param_checksum(const TrainConfig& config) {
  config.validate();
  ModelParams p = init_params(config);
  double acc = 0.0;
  for (Matrix* m : p.all()) {
    for (double v : m->data()) acc += v;
  }
  return acc;
}

RunResult train(const TrainConfig& config, const SyntheticTask& task) {
  config.validate();
  if (task.seq_len != config.seq_len || task.vocab != config.vocab ||
      task.classes != config.classes) {
    throw ConfigError("train: task and config disagree on seq_len/vocab/classes");
  }
  const Dataset train_data = generate_task(task, config.train_samples);
  SyntheticTask eval_task = task;
  eval_task.seed = task.seed + 1;
  const Dataset eval_data = generate_task(eval_task, config.eval_samples);

  ModelParams params = init_params(config);
  ModelParams velocity = zeros_like(params);

  RunResult result;
  result.lambda = config.attention.lambda;
  result.attention_kind = config.attention.kind;

  Workspace ws{&config, &params, positional_encoding(config.seq_len, config.d_model)};

  constexpr double kMomentum = 0.9;
  ForwardCache cache;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    double loss_sum = 0.0;
    std::size_t correct = 0;
    std::size_t index = 0;
    while (index < train_data.size()) {
      const std::size_t batch_end =
          std::min(index + config.batch, train_data.size());
      const std::size_t batch_n = batch_end - index;
      ModelParams grads = zeros_like(params);
      for (; index < batch_end; ++index) {
        const Sample& s = train_data[index];
        loss_sum += forward_sample(ws, s, cache, result.op_tally);
        if (predict_from_probs(cache.probs) == s.label) ++correct;
        backward_sample(ws, s, cache, grads);
      }
      const double inv_batch = 1.0 / static_cast<double>(batch_n);
      std::vector<Matrix*> ps = params.all();
      std::vector<Matrix*> gs = grads.all();
      std::vector<Matrix*> vs = velocity.all();
      for (std::size_t m = 0; m < ps.size(); ++m) {
        for (std::size_t i = 0; i < ps[m]->size(); ++i) {
          const double g = gs[m]->data()[i] * inv_batch;
          double& vel = vs[m]->data()[i];
          vel = kMomentum * vel + g;
          ps[m]->data()[i] -= config.lr * vel;
        }
      }
    }
    const double mean_loss = loss_sum / static_cast<double>(train_data.size());
    if (!std::isfinite(mean_loss)) {
      throw TrainingError("train: loss diverged at epoch " + std::to_string(epoch),
                          static_cast<int>(epoch));
    }
    const double train_acc =
        static_cast<double>(correct) / static_cast<double>(train_data.size());
    const double eval_acc = evaluate(ws, eval_data, result.op_tally);
    result.loss_curve.push_back(mean_loss);
    result.epochs.push_back({epoch, mean_loss, train_acc, eval_acc});
    result.final_train_acc = train_acc;
    result.final_eval_acc = eval_acc;
  }
  return result;
}

std::vector<RunResult> lambda_grid_search(const TrainConfig& config,
                                          const SyntheticTask& task) {
  if (config.lambda_grid.empty()) {
    throw ConfigError("lambda_grid_search: lambda_grid is empty");
  }
  std::vector<RunResult> results;
  for (double lambda : config.lambda_grid) {
    TrainConfig run_cfg = config;
    run_cfg.attention.kind = ScoreKind::l1();
    run_cfg.attention.lambda = lambda;
    results.push_back(train(run_cfg, task));
  }
  std::stable_sort(results.begin(), results.end(),
                   [](const RunResult& a, const RunResult& b) {
                     if (a.final_eval_acc != b.final_eval_acc) {
                       return a.final_eval_acc > b.final_eval_acc;
                     }
                     return a.lambda < b.lambda;
                   });
  return results;
}

TrainConfig baseline_needle_config() {
  TrainConfig cfg;
  cfg.layers = 2;
  cfg.heads = 2;
  cfg.d_model = 32;
  cfg.ffn_dim = 64;
  cfg.seq_len = 16;
  cfg.vocab = 16;
  cfg.classes = 8;
  cfg.lr = 0.05;
  cfg.epochs = 12;
  cfg.batch = 32;
  cfg.seed = 42;
  cfg.attention = AttentionSpec{ScoreKind::dot_product(), 1.0, 16, std::nullopt};
  cfg.lambda_grid = {1.0, 2.0, 3.0, 5.0};
  cfg.train_samples = 2000;
  cfg.eval_samples = 500;
  return cfg;
}

SyntheticTask baseline_needle_task() {
  SyntheticTask task;
  task.kind = TaskKind::kNeedleRetrieval;
  task.seq_len = 16;
  task.vocab = 16;
  task.classes = 8;
  task.seed = 7;
  return task;
}

std::string run_result_jsonl(const RunResult& r) {
  std::ostringstream out;
  for (const EpochRecord& e : r.epochs) {
    nlohmann::json j{{"epoch", e.epoch},
                     {"loss", e.loss},
                     {"train_acc", e.train_acc},
                     {"eval_acc", e.eval_acc},
                     {"kind", std::string(r.attention_kind.name())},
                     {"lambda", r.lambda}};
    out << j.dump() << '\n';
  }
  return out.str();
}

std::string grid_summary_csv(const std::vector<RunResult>& results) {
  std::ostringstream out;
  out << "kind,lambda,final_train_acc,final_eval_acc,epochs,"
         "score_mults,score_adds,score_abs_diffs\n";
  for (const RunResult& r : results) {
    out << r.attention_kind.name() << ',' << format_double(r.lambda) << ','
        << format_double(r.final_train_acc) << ','
        << format_double(r.final_eval_acc) << ',' << r.epochs.size() << ','
        << r.op_tally.mults << ',' << r.op_tally.adds << ','
        << r.op_tally.abs_diffs << '\n';
  }
  return out.str();
}

}  // namespace ecoattn
