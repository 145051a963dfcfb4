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
#ifndef ECOATTN_TRAIN_HPP_
#define ECOATTN_TRAIN_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "ecoattn/attention.hpp"
#include "ecoattn/opcount.hpp"

namespace ecoattn {

enum class TaskKind { kNeedleRetrieval, kMajorityToken };

/// Deterministic synthetic classification tasks.
///
/// NeedleRetrieval: a sentinel token (id vocab-1) marks a position; the label
/// is the token value stored right at the marked position (the slot after the
/// sentinel). Needle values are drawn from [0, classes), fillers from
/// [classes, vocab-1), so the needle is the only class-range token in the
/// sequence and one content-based attention hop recovers it. Requires
/// classes + 2 <= vocab.
///
/// MajorityToken: the label is the most frequent token id, ties broken toward
/// the lower id; the generator plants a strict majority of the label token.
/// Requires classes <= vocab.
struct SyntheticTask {
  TaskKind kind = TaskKind::kNeedleRetrieval;
  std::size_t seq_len = 16;
  std::size_t vocab = 16;
  std::size_t classes = 8;
  std::uint64_t seed = 7;
};

struct Sample {
  std::vector<std::size_t> tokens;
  std::size_t label = 0;
};
using Dataset = std::vector<Sample>;

/// Class-balanced within +-1 sample, deterministic given task.seed.
Dataset generate_task(const SyntheticTask& task, std::size_t n_samples);

/// Recomputes a NeedleRetrieval label from a sequence (token following the
/// sentinel id vocab-1).
std::size_t needle_label(const std::vector<std::size_t>& tokens, std::size_t vocab);

/// Most frequent token id, ties broken toward the lower id.
std::size_t majority_label(const std::vector<std::size_t>& tokens);

/// Toy encoder-classifier hyperparameters. The model is: token embedding +
/// sinusoidal positional encoding, `layers` pre-norm blocks
/// (x += MHA(LN(x)); x += FFN(LN(x)) with a tanh-approximated GELU), mean
/// pooling, linear classifier, cross-entropy loss, minibatch gradient descent
/// with momentum 0.9. Weight initialization draws never depend on the
/// attention kind, so runs that differ only in `attention` share every
/// initial weight.
struct TrainConfig {
  std::size_t layers = 2;
  std::size_t heads = 2;
  std::size_t d_model = 32;
  std::size_t ffn_dim = 64;
  std::size_t seq_len = 16;
  std::size_t vocab = 16;
  std::size_t classes = 8;
  double lr = 0.05;
  std::size_t epochs = 12;
  std::size_t batch = 32;
  std::uint64_t seed = 42;
  AttentionSpec attention{ScoreKind::dot_product(), 1.0, 16, std::nullopt};
  std::vector<double> lambda_grid;
  std::size_t train_samples = 2000;
  std::size_t eval_samples = 500;

  void validate() const;  // throws ConfigError
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double loss = 0.0;      // mean training cross-entropy over the epoch
  double train_acc = 0.0;
  double eval_acc = 0.0;
};

struct RunResult {
  double final_train_acc = 0.0;
  double final_eval_acc = 0.0;
  std::vector<double> loss_curve;  // one entry per epoch
  std::vector<EpochRecord> epochs;
  double lambda = 0.0;
  ScoreKind attention_kind = ScoreKind::dot_product();
  OpTally op_tally;  // attention-score ops over every forward pass of the run
};

/// Trains on generate_task(task, train_samples) and evaluates each epoch on a
/// held-out set generated from task.seed + 1. Deterministic: identical
/// configs produce bitwise-identical loss curves. Throws TrainingError
/// (carrying the epoch) if the loss turns non-finite.
RunResult train(const TrainConfig& config, const SyntheticTask& task);

/// One L1 run per lambda in config.lambda_grid, all sharing the same seed and
/// data; results sorted by eval accuracy descending, ties toward smaller
/// lambda.
std::vector<RunResult> lambda_grid_search(const TrainConfig& config,
                                          const SyntheticTask& task);

/// Sum of all initial parameters. Depends only on the sizes and seed, never
/// on the attention kind; used to pin the shared-initialization property.
double initial_param_checksum(const TrainConfig& config);

/// Whole-model gradient probe: analytic gradients of the mean loss over the
/// first n_samples, compared against central differences on a deterministic
/// sample of n_probes parameter coordinates. Returns the max relative error.
double trainer_fd_probe(const TrainConfig& config, const SyntheticTask& task,
                        std::size_t n_samples, std::size_t n_probes,
                        double step = 1e-5);

/// Fixed baseline used by the CLI defaults and the acceptance run.
TrainConfig baseline_needle_config();
SyntheticTask baseline_needle_task();

/// One JSON object per epoch: {"epoch", "loss", "train_acc", "eval_acc",
/// "kind", "lambda"}, newline separated.
std::string run_result_jsonl(const RunResult& r);

/// Sorted summary across runs:
/// kind,lambda,final_train_acc,final_eval_acc,epochs,score_mults,score_adds,score_abs_diffs
std::string grid_summary_csv(const std::vector<RunResult>& results);

}  // namespace ecoattn

#endif  // ECOATTN_TRAIN_HPP_
