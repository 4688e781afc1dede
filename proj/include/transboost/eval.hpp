/*
 * Copyright 2026 The TransBoost Lab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

// Evaluation: risk and accuracy on the hidden test labels, inductive vs.
// transductive comparison, relative loss improvement, and the experiment
// drivers (single run, fraction sweep, loss-variant ablation).

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "transboost/data.hpp"
#include "transboost/error.hpp"
#include "transboost/model.hpp"
#include "transboost/trainer.hpp"
#include "transboost/transloss.hpp"

namespace transboost {

// The only reader of HiddenLabels.
struct EvalAccess {
  static std::span<const std::size_t> labels(const HiddenLabels& hidden) { return hidden.labels_; }
};

enum class LossKind { ZeroOne, CrossEntropy };

// Average pointwise loss of the model over (X, Y).
inline double risk(const Parameters& params, const Matrix& x, std::span<const std::size_t> y, LossKind kind) {
  if (x.rows() != y.size()) throw ShapeError("risk: features and labels differ in length");
  if (x.rows() == 0) throw InputError("risk of an empty set is undefined");
  double total = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const Vector logits = forward(params, x.row(i));
    if (kind == LossKind::ZeroOne)
      total += argmax(logits) == y[i] ? 0.0 : 1.0;
    else
      total += cross_entropy(softmax(logits), y[i]);
  }
  return total / static_cast<double>(x.rows());
}

inline double risk(const Parameters& params, const Matrix& x, const HiddenLabels& y, LossKind kind) {
  return risk(params, x, EvalAccess::labels(y), kind);
}

inline double top1(const Parameters& params, const Matrix& x, std::span<const std::size_t> y) {
  return 1.0 - risk(params, x, y, LossKind::ZeroOne);
}

inline double top1(const Parameters& params, const Matrix& x, const HiddenLabels& y) {
  return top1(params, x, EvalAccess::labels(y));
}

// Accuracies are fractions in [0, 1]; `improvement` is their difference in
// percentage points.
struct RunReport {
  std::string method = "transboost";
  std::string variant = "separate";
  double inductive_top1 = 0.0;
  double transductive_top1 = 0.0;
  double improvement = 0.0;
  std::optional<double> loss_before;
  std::optional<double> loss_after;
  std::optional<double> loss_rel_improvement;
  // Accuracy on test-pool instances left out at this test fraction.
  std::optional<double> heldout_inductive_top1;
  std::optional<double> heldout_transductive_top1;
  double train_fraction = 1.0;
  double test_fraction = 1.0;
  std::size_t labeled_count = 0;
  std::size_t unlabeled_count = 0;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;

  static RunReport from_accuracies(double inductive, double transductive) {
    RunReport r;
    r.inductive_top1 = inductive;
    r.transductive_top1 = transductive;
    r.improvement = 100.0 * (transductive - inductive);
    return r;
  }
};

inline RunReport compare(const Parameters& theta0, const Parameters& theta, const Matrix& x_u, const HiddenLabels& y_u) {
  return RunReport::from_accuracies(top1(theta0, x_u, y_u), top1(theta, x_u, y_u));
}

// Relative decrease of the exact pairwise loss, in percent, both sides
// evaluated against the same frozen snapshot. Absent when the starting loss
// is zero.
inline std::optional<double> relative_improvement(double before, double after) {
  if (!(before > 0.0)) return std::nullopt;
  return (before - after) / before * 100.0;
}

struct LossImprovement {
  double before = 0.0;
  double after = 0.0;
  std::optional<double> relative;  // percent
};

inline LossImprovement loss_improvement(const Parameters& theta0, const Parameters& theta, const Matrix& x_u,
                                        const Snapshot& snapshot, const TransLossConfig& config) {
  if (x_u.rows() < 2) throw InputError("loss improvement needs at least two test instances");
  const auto view = SnapshotView::of(snapshot);
  const double before = exact_loss(predict_proba(theta0, x_u), view, config).value;
  const double after = exact_loss(predict_proba(theta, x_u), view, config).value;
  return {before, after, relative_improvement(before, after)};
}

enum class Method { TransBoost, EntMin, CrossEntropy };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::TransBoost: return "transboost";
    case Method::EntMin: return "entmin";
    case Method::CrossEntropy: return "ce";
  }
  return "transboost";
}

inline Method parse_method(std::string_view name) {
  if (name == "transboost") return Method::TransBoost;
  if (name == "entmin") return Method::EntMin;
  if (name == "ce") return Method::CrossEntropy;
  throw InputError("unknown method '" + std::string(name) + "'");
}

inline TrainConfig default_pretrain_config() {
  TrainConfig t;
  t.epochs = 100;
  t.labeled_batch = 32;
  t.lr = 0.05;
  return t;
}

struct ExperimentConfig {
  ModelSpec model;
  TrainConfig pretrain = default_pretrain_config();
  TrainConfig finetune;
  SplitSpec split;
  Method method = Method::TransBoost;
};

// Split, pretrained model, and frozen snapshot for one seed; shared by every
// fine-tuning method run on that seed.
struct PreparedRun {
  TransductiveSplit split;
  Parameters theta0;
  Snapshot snapshot;
  std::uint64_t seed = 0;
};

inline PreparedRun prepare_run(const Dataset& d, const ExperimentConfig& cfg, std::uint64_t seed) {
  SplitSpec split_spec = cfg.split;
  split_spec.seed = seed;
  TrainConfig pre = cfg.pretrain;
  pre.seed = seed;
  TransductiveSplit split = transductive_split(d, split_spec);
  Parameters theta0 = pretrain(split.labeled, cfg.model, pre);
  Snapshot snapshot = build_snapshot(theta0, split.unlabeled, "theta0/seed=" + std::to_string(seed));
  return {std::move(split), std::move(theta0), std::move(snapshot), seed};
}

inline Parameters run_method(const PreparedRun& prep, const TrainConfig& finetune_cfg, Method method,
                             const EpochCallback& on_epoch = {}) {
  TrainConfig cfg = finetune_cfg;
  cfg.seed = prep.seed;
  const auto& s = prep.split;
  switch (method) {
    case Method::TransBoost: return transboost_finetune(prep.theta0, s.labeled, s.unlabeled, prep.snapshot, cfg, on_epoch);
    case Method::EntMin: return entmin_finetune(prep.theta0, s.labeled, s.unlabeled, cfg, on_epoch);
    case Method::CrossEntropy: return ce_finetune(prep.theta0, s.labeled, s.unlabeled, cfg, on_epoch);
  }
  return prep.theta0;
}

// Fills every report field derivable from the prepared run and its result.
inline RunReport evaluate_run(const PreparedRun& prep, const Parameters& theta, const TrainConfig& finetune_cfg,
                              Method method, const SplitSpec& split_spec) {
  const auto& s = prep.split;
  RunReport r = compare(prep.theta0, theta, s.unlabeled, s.truth);
  r.method = std::string(to_string(method));
  r.variant = std::string(to_string(finetune_cfg.loss.variant));
  if (s.unlabeled.rows() >= 2) {
    const auto li = loss_improvement(prep.theta0, theta, s.unlabeled, prep.snapshot, finetune_cfg.loss);
    r.loss_before = li.before;
    r.loss_after = li.after;
    r.loss_rel_improvement = li.relative;
  }
  if (s.heldout.size() > 0) {
    r.heldout_inductive_top1 = top1(prep.theta0, s.heldout.features, *s.heldout.labels);
    r.heldout_transductive_top1 = top1(theta, s.heldout.features, *s.heldout.labels);
  }
  r.train_fraction = split_spec.train_fraction;
  r.test_fraction = split_spec.test_fraction;
  r.labeled_count = s.labeled.size();
  r.unlabeled_count = s.unlabeled.rows();
  r.seed = prep.seed;
  return r;
}

inline RunReport run_experiment(const Dataset& d, const ExperimentConfig& cfg, std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  const PreparedRun prep = prepare_run(d, cfg, seed);
  const Parameters theta = run_method(prep, cfg.finetune, cfg.method);
  RunReport r = evaluate_run(prep, theta, cfg.finetune, cfg.method, cfg.split);
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

struct Summary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for a single value
  std::size_t count = 0;
};

inline Summary summarize(std::span<const double> values) {
  Summary s;
  s.count = values.size();
  if (values.empty()) return s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

struct ReportAggregate {
  Summary inductive_top1;
  Summary transductive_top1;
  Summary improvement;
  Summary loss_rel_improvement;  // over runs where it is defined
  Summary heldout_inductive_top1;
  Summary heldout_transductive_top1;
};

inline ReportAggregate aggregate(std::span<const RunReport> reports) {
  std::vector<double> ind, trans, imp, rel, hind, htrans;
  for (const auto& r : reports) {
    ind.push_back(r.inductive_top1);
    trans.push_back(r.transductive_top1);
    imp.push_back(r.improvement);
    if (r.loss_rel_improvement) rel.push_back(*r.loss_rel_improvement);
    if (r.heldout_inductive_top1) hind.push_back(*r.heldout_inductive_top1);
    if (r.heldout_transductive_top1) htrans.push_back(*r.heldout_transductive_top1);
  }
  return {summarize(ind), summarize(trans), summarize(imp), summarize(rel), summarize(hind), summarize(htrans)};
}

namespace detail {

// Runs task(i) for i in [0, n) on up to `jobs` threads. Results must be
// written to per-index slots by the task.
template <typename Task>
void run_indexed(std::size_t n, std::size_t jobs, Task&& task) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          task(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace detail

struct SweepCell {
  double train_fraction = 1.0;
  double test_fraction = 1.0;
  ReportAggregate aggregate;
};

struct SweepGrid {
  std::vector<double> train_fractions;
  std::vector<double> test_fractions;
  std::vector<std::uint64_t> seeds;
  std::vector<RunReport> runs;  // ordered by (train fraction, test fraction, seed)
  std::vector<SweepCell> cells;  // row-major over (train fraction, test fraction)

  const SweepCell& cell(std::size_t train_idx, std::size_t test_idx) const {
    return cells.at(train_idx * test_fractions.size() + test_idx);
  }
};

inline SweepGrid sweep(const Dataset& d, std::span<const double> train_fractions, std::span<const double> test_fractions,
                       std::span<const std::uint64_t> seeds, const ExperimentConfig& cfg, std::size_t jobs = 1) {
  if (train_fractions.empty() || test_fractions.empty() || seeds.empty())
    throw InputError("sweep needs at least one train fraction, test fraction and seed");
  for (double f : train_fractions)
    if (!(f > 0.0 && f <= 1.0)) throw InputError("sweep train fraction outside (0, 1]");
  for (double f : test_fractions)
    if (!(f > 0.0 && f <= 1.0)) throw InputError("sweep test fraction outside (0, 1]");

  SweepGrid grid{{train_fractions.begin(), train_fractions.end()},
                 {test_fractions.begin(), test_fractions.end()},
                 {seeds.begin(), seeds.end()},
                 {},
                 {}};
  const std::size_t nt = train_fractions.size(), nu = test_fractions.size(), ns = seeds.size();
  grid.runs.resize(nt * nu * ns);
  detail::run_indexed(grid.runs.size(), jobs, [&](std::size_t k) {
    const std::size_t ti = k / (nu * ns), ui = (k / ns) % nu, si = k % ns;
    ExperimentConfig cell_cfg = cfg;
    cell_cfg.split.train_fraction = train_fractions[ti];
    cell_cfg.split.test_fraction = test_fractions[ui];
    grid.runs[k] = run_experiment(d, cell_cfg, seeds[si]);
  });
  for (std::size_t ti = 0; ti < nt; ++ti) {
    for (std::size_t ui = 0; ui < nu; ++ui) {
      std::span<const RunReport> slice(grid.runs.data() + (ti * nu + ui) * ns, ns);
      grid.cells.push_back({train_fractions[ti], test_fractions[ui], aggregate(slice)});
    }
  }
  return grid;
}

struct VariantResult {
  Variant variant = Variant::Separate;
  std::vector<RunReport> runs;  // one per seed, in seed order
  ReportAggregate aggregate;
  // Top-1 improvement reported for this variant on ImageNet (ResNet-50), kept
  // for side-by-side display; not reproduced here.
  double reference_improvement = 0.0;
};

struct AblationResult {
  std::vector<std::uint64_t> seeds;
  std::vector<VariantResult> variants;  // Separate, Attract, Both
};

inline double reference_improvement(Variant v) {
  switch (v) {
    case Variant::Separate: return 2.88;
    case Variant::Attract: return -1.51;
    case Variant::Both: return 2.85;
  }
  return 0.0;
}

// All three loss variants per seed, sharing that seed's split, pretrained
// model and snapshot.
inline AblationResult ablation(const Dataset& d, std::span<const std::uint64_t> seeds, const ExperimentConfig& cfg,
                               std::size_t jobs = 1) {
  if (seeds.empty()) throw InputError("ablation needs at least one seed");
  constexpr Variant kVariants[] = {Variant::Separate, Variant::Attract, Variant::Both};
  AblationResult out{{seeds.begin(), seeds.end()}, {}};
  for (auto v : kVariants) {
    VariantResult vr;
    vr.variant = v;
    vr.runs.resize(seeds.size());
    vr.reference_improvement = reference_improvement(v);
    out.variants.push_back(std::move(vr));
  }
  detail::run_indexed(seeds.size(), jobs, [&](std::size_t si) {
    const PreparedRun prep = prepare_run(d, cfg, seeds[si]);
    for (std::size_t vi = 0; vi < 3; ++vi) {
      const auto start = std::chrono::steady_clock::now();
      TrainConfig ft = cfg.finetune;
      ft.loss.variant = kVariants[vi];
      const Parameters theta = run_method(prep, ft, Method::TransBoost);
      RunReport r = evaluate_run(prep, theta, ft, Method::TransBoost, cfg.split);
      r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      out.variants[vi].runs[si] = std::move(r);
    }
  });
  for (auto& vr : out.variants) vr.aggregate = aggregate(vr.runs);
  return out;
}

}  // namespace transboost
