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
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ecoattn/attention.hpp"
#include "ecoattn/errors.hpp"
#include "ecoattn/grad.hpp"
#include "ecoattn/matrix.hpp"
#include "ecoattn/opcount.hpp"
#include "ecoattn/rng.hpp"
#include "ecoattn/sparse.hpp"
#include "ecoattn/train.hpp"

namespace {

using namespace ecoattn;

constexpr int kExitOk = 0;
constexpr int kExitContract = 1;
constexpr int kExitUsage = 2;

std::uint64_t default_seed() {
  if (const char* env = std::getenv("ECOATTN_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw ParameterError("ECOATTN_SEED is not a valid unsigned integer");
    }
  }
  return 42;
}

void emit(const std::string& content, const std::string& path) {
  if (path.empty()) {
    std::cout << content;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open output file " + path);
  out << content;
}

ScoreKind parse_kind(const std::string& name, double p) {
  return ScoreKind::parse(name, p);
}

struct CurvesArgs {
  std::size_t d_k = 16;
  std::vector<double> lambdas{1.0};
  double d_max = 5.0;
  std::size_t steps = 100;
  std::string output;
};

struct OpcountArgs {
  std::size_t n = 2048;
  std::size_t d_k = 128;
  bool full_layer = false;
  std::vector<std::size_t> sweep_n;
  std::vector<std::size_t> sweep_dk;
  std::string output;
};

struct GradcheckArgs {
  std::string kind = "l1";
  double p = 2.0;
  double lambda = 1.0;
  std::size_t n = 5;
  std::size_t d_k = 7;
  std::uint64_t seed = 0;
  bool seed_given = false;
  double step = 1e-5;
  std::string output;
};

struct AttnArgs {
  std::string kind = "l1";
  double p = 2.0;
  std::string variant = "dense";
  std::string q_path, k_path, v_path;
  double lambda = 1.0;
  std::size_t window = 0;
  std::vector<std::size_t> globals;
  std::size_t proj_k = 0;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string output;
};

struct TrainArgs {
  std::string task = "needle";
  std::string kind = "dot";
  double lambda = 1.0;
  std::vector<double> lambda_grid;
  std::optional<std::size_t> epochs;
  std::optional<double> lr;
  std::optional<std::size_t> train_samples;
  std::optional<std::size_t> eval_samples;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::uint64_t task_seed = 0;
  bool task_seed_given = false;
  std::string output;
  std::string summary;
};

struct EquivArgs {
  std::size_t n = 6;
  std::size_t d_k = 8;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string output;
};

int run_curves(const CurvesArgs& a) {
  emit(kernel_curve_csv(a.d_k, a.lambdas, a.d_max, a.steps), a.output);
  return kExitOk;
}

int run_opcount(const OpcountArgs& a) {
  if (!a.sweep_n.empty() || !a.sweep_dk.empty()) {
    if (a.sweep_n.empty() || a.sweep_dk.empty()) {
      throw ParameterError("opcount: --sweep-n and --sweep-dk go together");
    }
    emit(reduction_sweep_csv(a.sweep_n, a.sweep_dk, EnergyModel{}, a.full_layer),
         a.output);
    return kExitOk;
  }
  const ReductionReport r = reduction_report(a.n, a.d_k, EnergyModel{}, a.full_layer);
  emit(reduction_report_json(r) + "\n", a.output);
  return kExitOk;
}

int run_gradcheck(const GradcheckArgs& a) {
  AttentionSpec spec{parse_kind(a.kind, a.p), a.lambda, a.d_k, std::nullopt};
  const std::uint64_t seed = a.seed_given ? a.seed : default_seed();
  const GradcheckResult r = gradcheck_attention(spec, a.n, seed, a.step);
  emit(gradcheck_json(r) + "\n", a.output);
  return r.report.max_rel_err < 1e-5 ? kExitOk : kExitContract;
}

int run_attn(const AttnArgs& a) {
  const ScoreKind kind = parse_kind(a.kind, a.p);
  const Matrix q = load_matrix(a.q_path);
  const Matrix k = load_matrix(a.k_path);
  const Matrix v = load_matrix(a.v_path);
  AttentionSpec spec{kind, a.lambda, q.cols(), std::nullopt};
  Matrix out;
  if (a.variant == "dense") {
    out = attention_forward(spec, q, k, v).output;
  } else if (a.variant == "longformer") {
    if (a.window == 0) {
      throw ParameterError("attn: --window is required for the longformer variant");
    }
    WindowSpec win{a.window, a.globals};
    out = longformer_l1_forward(spec, win, q, k, v);
  } else if (a.variant == "linformer") {
    if (a.proj_k == 0) {
      throw ParameterError("attn: --proj-k is required for the linformer variant");
    }
    const std::uint64_t seed = a.seed_given ? a.seed : default_seed();
    SplitMix64 rng(seed);
    const double s = 1.0 / std::sqrt(static_cast<double>(a.proj_k));
    ProjectionSpec proj{a.proj_k, rand_matrix(rng, a.proj_k, k.rows(), s),
                        rand_matrix(rng, a.proj_k, k.rows(), s)};
    out = linformer_l1_forward(spec, proj, q, k, v);
  } else {
    throw ParameterError("attn: unknown variant " + a.variant);
  }
  std::ostringstream buf;
  write_matrix(buf, out);
  emit(buf.str(), a.output);
  return kExitOk;
}

int run_train(const TrainArgs& a) {
  TrainConfig cfg = baseline_needle_config();
  SyntheticTask task = baseline_needle_task();
  if (a.task == "majority") {
    task.kind = TaskKind::kMajorityToken;
  } else if (a.task != "needle") {
    throw ParameterError("train: unknown task " + a.task + " (needle|majority)");
  }
  cfg.attention.kind = parse_kind(a.kind, 2.0);
  cfg.attention.lambda = a.lambda;
  if (a.epochs) cfg.epochs = *a.epochs;
  if (a.lr) cfg.lr = *a.lr;
  if (a.train_samples) cfg.train_samples = *a.train_samples;
  if (a.eval_samples) cfg.eval_samples = *a.eval_samples;
  if (a.seed_given) cfg.seed = a.seed;
  if (a.task_seed_given) task.seed = a.task_seed;

  std::vector<RunResult> results;
  if (!a.lambda_grid.empty()) {
    cfg.lambda_grid = a.lambda_grid;
    results = lambda_grid_search(cfg, task);
  } else {
    results.push_back(train(cfg, task));
  }
  std::string jsonl;
  for (const RunResult& r : results) jsonl += run_result_jsonl(r);
  emit(jsonl, a.output);
  if (!a.summary.empty()) {
    emit(grid_summary_csv(results), a.summary);
  }
  return kExitOk;
}

int run_equiv(const EquivArgs& a) {
  const std::uint64_t seed = a.seed_given ? a.seed : default_seed();
  SplitMix64 rng(seed);
  const Matrix q = rand_matrix(rng, a.n, a.d_k, 1.0);
  const Matrix k = rand_matrix(rng, a.n, a.d_k, 1.0);
  const Matrix v = rand_matrix(rng, a.n, a.d_k, 1.0);
  const double dev = dot_equivalence_check(q, k, v);
  emit(format_double(dev) + "\n", a.output);
  return dev < 1e-10 ? kExitOk : kExitContract;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "ecoattn: multiplication-free L1 attention next to scaled dot-product "
      "attention, with kernel curves, op/energy accounting, gradient checks, "
      "sparse variants and a toy training harness"};
  app.require_subcommand(1);

  CurvesArgs curves;
  CLI::App* c = app.add_subcommand("curves", "Kernel decay curves as CSV");
  c->add_option("--dk", curves.d_k, "Key dimension Dk")->check(CLI::PositiveNumber);
  c->add_option("--lambda", curves.lambdas, "Laplacian lambda values")
      ->delimiter(',');
  c->add_option("--dmax", curves.d_max, "Largest |d| on the grid");
  c->add_option("--steps", curves.steps, "Number of grid intervals")
      ->check(CLI::PositiveNumber);
  c->add_option("--output,-o", curves.output, "Output path (default stdout)");

  OpcountArgs opcount;
  CLI::App* oc = app.add_subcommand("opcount", "Score op counts and energy report");
  oc->add_option("--n", opcount.n, "Sequence length")->check(CLI::PositiveNumber);
  oc->add_option("--dk", opcount.d_k, "Key dimension")->check(CLI::PositiveNumber);
  oc->add_flag("--full-layer", opcount.full_layer,
               "Count the whole layer (projections, softmax, alpha*V), not just "
               "the scores");
  oc->add_option("--sweep-n", opcount.sweep_n, "CSV sweep: sequence lengths")
      ->delimiter(',');
  oc->add_option("--sweep-dk", opcount.sweep_dk, "CSV sweep: key dimensions")
      ->delimiter(',');
  oc->add_option("--output,-o", opcount.output, "Output path (default stdout)");

  GradcheckArgs gradcheck;
  CLI::App* gc = app.add_subcommand(
      "gradcheck", "Analytic vs central finite-difference gradients (exit 1 when "
                   "max relative error >= 1e-5)");
  gc->add_option("--kind", gradcheck.kind, "Score kind: dot|l1|squared_l2|lp");
  gc->add_option("--p", gradcheck.p, "p for the lp kind");
  gc->add_option("--lambda", gradcheck.lambda, "Tuning parameter lambda");
  gc->add_option("--n", gradcheck.n, "Sequence length")->check(CLI::PositiveNumber);
  gc->add_option("--dk", gradcheck.d_k, "Key dimension")->check(CLI::PositiveNumber);
  auto* gseed = gc->add_option("--seed", gradcheck.seed, "Instance seed");
  gc->add_option("--step", gradcheck.step, "Central difference step");
  gc->add_option("--output,-o", gradcheck.output, "Output path (default stdout)");

  AttnArgs attn;
  CLI::App* at = app.add_subcommand("attn", "Run attention on matrix fixtures");
  at->add_option("--kind", attn.kind, "Score kind: dot|l1|squared_l2|lp");
  at->add_option("--p", attn.p, "p for the lp kind");
  at->add_option("--variant", attn.variant, "dense|longformer|linformer");
  at->add_option("--q", attn.q_path, "Query fixture")->required();
  at->add_option("--k", attn.k_path, "Key fixture")->required();
  at->add_option("--v", attn.v_path, "Value fixture")->required();
  at->add_option("--lambda", attn.lambda, "Tuning parameter lambda");
  at->add_option("--window", attn.window, "Longformer window width (even)");
  at->add_option("--global", attn.globals, "Longformer global token indices")
      ->delimiter(',');
  at->add_option("--proj-k", attn.proj_k, "Linformer projection rank");
  auto* aseed = at->add_option("--seed", attn.seed,
                               "Seed for the generated linformer projections");
  at->add_option("--output,-o", attn.output, "Output path (default stdout)");

  TrainArgs train_args;
  CLI::App* tr = app.add_subcommand(
      "train", "Train the toy encoder classifier; epochs as JSON lines");
  tr->add_option("--task", train_args.task, "needle|majority");
  tr->add_option("--kind", train_args.kind,
                 "Score kind: dot|l1|squared_l2|lp (lp uses p = 2; op tallies "
                 "cover dot and l1 only)");
  tr->add_option("--lambda", train_args.lambda, "Lambda for a single l1 run");
  tr->add_option("--lambda-grid", train_args.lambda_grid,
                 "Grid-search lambdas (forces l1 runs)")
      ->delimiter(',');
  tr->add_option("--epochs", train_args.epochs, "Training epochs");
  tr->add_option("--lr", train_args.lr, "Learning rate");
  tr->add_option("--train-samples", train_args.train_samples, "Training set size");
  tr->add_option("--eval-samples", train_args.eval_samples, "Held-out set size");
  auto* tseed = tr->add_option("--seed", train_args.seed, "Model init seed");
  auto* tkseed =
      tr->add_option("--task-seed", train_args.task_seed, "Dataset seed");
  tr->add_option("--output,-o", train_args.output, "JSONL path (default stdout)");
  tr->add_option("--summary", train_args.summary, "Summary CSV path");

  EquivArgs equiv;
  CLI::App* eq = app.add_subcommand(
      "equiv", "Dot-product vs squared-L2(lambda=1/2) equivalence deviation "
               "(exit 1 when >= 1e-10)");
  eq->add_option("--n", equiv.n, "Sequence length")->check(CLI::PositiveNumber);
  eq->add_option("--dk", equiv.d_k, "Key dimension")->check(CLI::PositiveNumber);
  auto* eseed = eq->add_option("--seed", equiv.seed, "Instance seed");
  eq->add_option("--output,-o", equiv.output, "Output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  gradcheck.seed_given = gseed->count() > 0;
  attn.seed_given = aseed->count() > 0;
  train_args.seed_given = tseed->count() > 0;
  train_args.task_seed_given = tkseed->count() > 0;
  equiv.seed_given = eseed->count() > 0;

  try {
    if (c->parsed()) return run_curves(curves);
    if (oc->parsed()) return run_opcount(opcount);
    if (gc->parsed()) return run_gradcheck(gradcheck);
    if (at->parsed()) return run_attn(attn);
    if (tr->parsed()) return run_train(train_args);
    if (eq->parsed()) return run_equiv(equiv);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitContract;
  }
  return kExitUsage;
}
