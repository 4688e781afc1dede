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

// Pretraining, test-set snapshotting, and the transductive fine-tuning loop.
//
// Random streams (see rng.hpp), all keyed by TrainConfig::seed:
//   Init             initial weights (pretraining only)
//   PretrainBatches  labeled-set shuffles during pretraining
//   FinetuneBatches  labeled/unlabeled shuffles during fine-tuning
//   Permutations     pairings of the unlabeled batch, one per step
// Batch order therefore does not depend on whether pairings are drawn, which
// makes lambda = 0 reproduce plain cross-entropy fine-tuning exactly.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "transboost/data.hpp"
#include "transboost/error.hpp"
#include "transboost/log.hpp"
#include "transboost/matrix.hpp"
#include "transboost/model.hpp"
#include "transboost/objective.hpp"
#include "transboost/rng.hpp"
#include "transboost/transloss.hpp"

namespace transboost {

struct TrainConfig {
  std::size_t epochs = 120;
  std::size_t labeled_batch = 64;
  std::size_t unlabeled_batch = 64;
  double lr = 1e-3;
  double momentum = 0.9;
  bool nesterov = true;
  double weight_decay = 1e-4;
  std::uint64_t seed = 0;
  TransLossConfig loss;

  void validate() const {
    if (labeled_batch == 0 || unlabeled_batch == 0) throw InputError("batch sizes must be positive");
    if (!(lr >= 0.0) || !std::isfinite(lr)) throw InputError("learning rate must be finite and nonnegative");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw InputError("momentum must lie in [0, 1)");
    if (!(weight_decay >= 0.0)) throw InputError("weight decay must be nonnegative");
    loss.validate();
  }
};

struct ModelSpec {
  Arch arch = Arch::Linear;
  std::size_t hidden = 16;  // Mlp1 only
};

struct OptimizerState {
  WeightBlocks velocity;

  static OptimizerState zeros_like(const Parameters& params) { return {zero_blocks(params.arch, params.dims)}; }
};

// One SGD step with coupled weight decay and (Nesterov) momentum:
//   g <- grad + wd * w;  v <- mu * v + g;  w <- w - lr * (nesterov ? g + mu * v : v)
// Parameters are left untouched if any updated value would be non-finite.
inline void sgd_step(Parameters& params, const GradientSet& grads, OptimizerState& state, const TrainConfig& config) {
  if (grads.blocks.size() != params.weights.size() || state.velocity.size() != params.weights.size())
    throw ShapeError("sgd_step: gradient/optimizer state shape differs from parameters");
  WeightBlocks next = params.weights;
  WeightBlocks velocity = state.velocity;
  for (std::size_t b = 0; b < next.size(); ++b) {
    auto& w = next[b];
    auto& v = velocity[b];
    const auto& g_in = grads.blocks[b];
    if (g_in.size() != w.size() || v.size() != w.size()) throw ShapeError("sgd_step: block size mismatch");
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double g = g_in[i] + config.weight_decay * w[i];
      v[i] = config.momentum * v[i] + g;
      const double update = config.nesterov ? g + config.momentum * v[i] : v[i];
      w[i] -= config.lr * update;
      if (!std::isfinite(w[i]) || !std::isfinite(v[i]))
        throw NumericError("sgd_step: non-finite update in block " + std::to_string(b) + " at " + std::to_string(i));
    }
  }
  params.weights = std::move(next);
  state.velocity = std::move(velocity);
}

struct BatchPair {
  std::vector<std::size_t> labeled;
  std::vector<std::size_t> unlabeled;
};

// Paired labeled/unlabeled batches, max(ceil(L/L'), ceil(U/U')) per epoch.
// Each set starts every epoch with a fresh shuffle and is cut into
// consecutive chunks of its batch size (the last chunk may be short). A set
// that runs out of chunks before the epoch ends is reshuffled and restarted,
// so the set needing more chunks is seen exactly once per epoch.
class CyclicalBatcher {
 public:
  CyclicalBatcher(std::size_t labeled_size, std::size_t unlabeled_size, std::size_t labeled_batch,
                  std::size_t unlabeled_batch, Rng rng)
      : labeled_(labeled_size, std::min(labeled_batch, labeled_size)),
        unlabeled_(unlabeled_size, std::min(unlabeled_batch, unlabeled_size)),
        rng_(rng) {
    if (labeled_size == 0) throw InputError("cyclical batching needs a nonempty labeled set");
    if (labeled_batch == 0 || unlabeled_batch == 0) throw InputError("batch sizes must be positive");
  }

  std::size_t steps_per_epoch() const { return std::max(labeled_.chunks(), unlabeled_.chunks()); }

  std::vector<BatchPair> next_epoch() {
    labeled_.restart(rng_);
    unlabeled_.restart(rng_);
    std::vector<BatchPair> out(steps_per_epoch());
    for (auto& step : out) {
      step.labeled = labeled_.next(rng_);
      step.unlabeled = unlabeled_.next(rng_);
    }
    return out;
  }

 private:
  class Cycle {
   public:
    Cycle(std::size_t size, std::size_t batch) : order_(size), batch_(batch) {}

    std::size_t chunks() const { return batch_ == 0 ? 0 : (order_.size() + batch_ - 1) / batch_; }

    void restart(Rng& rng) {
      std::iota(order_.begin(), order_.end(), std::size_t{0});
      shuffle(std::span<std::size_t>(order_), rng);
      cursor_ = 0;
    }

    std::vector<std::size_t> next(Rng& rng) {
      if (order_.empty()) return {};
      if (cursor_ >= order_.size()) restart(rng);
      const std::size_t end = std::min(cursor_ + batch_, order_.size());
      std::vector<std::size_t> batch(order_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                                     order_.begin() + static_cast<std::ptrdiff_t>(end));
      cursor_ = end;
      return batch;
    }

   private:
    std::vector<std::size_t> order_;
    std::size_t batch_;
    std::size_t cursor_ = 0;
  };

  Cycle labeled_;
  Cycle unlabeled_;
  Rng rng_;
};

// All batches of `epochs` epochs, flattened in step order.
inline std::vector<BatchPair> cyclical_batches(std::size_t labeled_size, std::size_t unlabeled_size,
                                               std::size_t labeled_batch, std::size_t unlabeled_batch,
                                               std::uint64_t seed, std::size_t epochs = 1) {
  CyclicalBatcher batcher(labeled_size, unlabeled_size, labeled_batch, unlabeled_batch,
                          Rng(seed, Stream::FinetuneBatches));
  std::vector<BatchPair> all;
  for (std::size_t e = 0; e < epochs; ++e) {
    auto epoch = batcher.next_epoch();
    all.insert(all.end(), std::make_move_iterator(epoch.begin()), std::make_move_iterator(epoch.end()));
  }
  return all;
}

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double cross_entropy = 0.0;  // mean over the epoch's steps
  double transductive = 0.0;   // mean over the epoch's steps
  double wall_seconds = 0.0;   // since the start of the run
};

using EpochCallback = std::function<void(const EpochRecord&)>;

inline Parameters pretrain(const Dataset& data, const ModelSpec& model, const TrainConfig& config,
                           const EpochCallback& on_epoch = {}) {
  config.validate();
  if (!data.has_labels() || data.size() == 0) throw InputError("pretraining needs a nonempty labeled dataset");
  if (data.num_classes < 2) throw InputError("pretraining needs at least two classes");
  data.validate();

  Rng init_rng(config.seed, Stream::Init);
  const Dims dims{data.dim(), model.arch == Arch::Mlp1 ? model.hidden : 0, data.num_classes};
  Parameters params = glorot_init(model.arch, dims, init_rng);
  OptimizerState state = OptimizerState::zeros_like(params);
  CyclicalBatcher batcher(data.size(), 0, config.labeled_batch, config.unlabeled_batch,
                          Rng(config.seed, Stream::PretrainBatches));

  const auto start = std::chrono::steady_clock::now();
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    double ce_sum = 0.0;
    const auto steps = batcher.next_epoch();
    for (const auto& step : steps) {
      BatchObjective obj;
      obj.term = TransductiveTerm::None;
      for (auto i : step.labeled) {
        obj.labeled_x.push_back(data.features.row(i));
        obj.labels.push_back((*data.labels)[i]);
      }
      ObjectiveGrad og = objective_grad(params, obj);
      ce_sum += og.value.cross_entropy;
      sgd_step(params, og.grad, state, config);
    }
    if (on_epoch) {
      const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
      on_epoch({epoch, ce_sum / static_cast<double>(steps.size()), 0.0, elapsed.count()});
    }
  }
  return params;
}

inline Snapshot build_snapshot(const Parameters& theta0, const Matrix& unlabeled, std::string source_tag = "theta0") {
  theta0.check_finite();
  std::vector<std::size_t> labels;
  std::vector<double> confidences;
  labels.reserve(unlabeled.rows());
  confidences.reserve(unlabeled.rows());
  for (std::size_t i = 0; i < unlabeled.rows(); ++i) {
    const Vector logits = forward(theta0, unlabeled.row(i));
    labels.push_back(argmax(logits));
    confidences.push_back(kappa(softmax(logits)));
  }
  return Snapshot(std::move(labels), std::move(confidences), std::move(source_tag), theta0.dims.c);
}

// Shared loop for every fine-tuning method. `snapshot` is consulted only for
// the TransBoost term.
inline Parameters finetune(const Parameters& theta0, const Dataset& labeled, const Matrix& unlabeled,
                           const TrainConfig& config, TransductiveTerm term, const Snapshot* snapshot,
                           const EpochCallback& on_epoch = {}) {
  config.validate();
  if (!labeled.has_labels() || labeled.size() == 0) throw InputError("fine-tuning needs a nonempty labeled set");
  if (labeled.dim() != theta0.dims.d || (!unlabeled.empty() && unlabeled.cols() != theta0.dims.d))
    throw ShapeError("fine-tuning data width does not match the model");

  if (term != TransductiveTerm::None && unlabeled.rows() < 2) {
    log::warn("fewer than two unlabeled instances; running cross-entropy fine-tuning only");
    term = TransductiveTerm::None;
  }

  Parameters params = theta0;
  OptimizerState state = OptimizerState::zeros_like(params);
  // The schedule always spans both sets, whatever the transductive term.
  CyclicalBatcher batcher(labeled.size(), unlabeled.rows(), config.labeled_batch, config.unlabeled_batch,
                          Rng(config.seed, Stream::FinetuneBatches));
  Rng perm_rng(config.seed, Stream::Permutations);

  const auto start = std::chrono::steady_clock::now();
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    double ce_sum = 0.0;
    double trans_sum = 0.0;
    const auto steps = batcher.next_epoch();
    for (const auto& step : steps) {
      BatchObjective obj;
      obj.term = term;
      obj.loss = config.loss;
      for (auto i : step.labeled) {
        obj.labeled_x.push_back(labeled.features.row(i));
        obj.labels.push_back((*labeled.labels)[i]);
      }
      for (auto i : step.unlabeled) obj.unlabeled_x.push_back(unlabeled.row(i));
      if (term == TransductiveTerm::TransBoost) {
        obj.snapshot = SnapshotView::of(*snapshot, step.unlabeled);
        obj.pairing = random_permutation(step.unlabeled.size(), perm_rng);
      }
      ObjectiveGrad og = objective_grad(params, obj);
      ce_sum += og.value.cross_entropy;
      trans_sum += og.value.transductive;
      sgd_step(params, og.grad, state, config);
    }
    if (on_epoch) {
      const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
      const auto n = static_cast<double>(steps.size());
      on_epoch({epoch, ce_sum / n, trans_sum / n, elapsed.count()});
    }
  }
  return params;
}

inline Parameters transboost_finetune(const Parameters& theta0, const Dataset& labeled, const Matrix& unlabeled,
                                      const Snapshot& snapshot, const TrainConfig& config,
                                      const EpochCallback& on_epoch = {}) {
  if (snapshot.size() != unlabeled.rows()) throw ShapeError("snapshot does not cover the unlabeled set");
  return finetune(theta0, labeled, unlabeled, config, TransductiveTerm::TransBoost, &snapshot, on_epoch);
}

inline Parameters transboost_finetune(const Parameters& theta0, const Dataset& labeled, const Matrix& unlabeled,
                                      const TrainConfig& config, const EpochCallback& on_epoch = {}) {
  const Snapshot snapshot = build_snapshot(theta0, unlabeled);
  return transboost_finetune(theta0, labeled, unlabeled, snapshot, config, on_epoch);
}

inline Parameters entmin_finetune(const Parameters& theta0, const Dataset& labeled, const Matrix& unlabeled,
                                  const TrainConfig& config, const EpochCallback& on_epoch = {}) {
  return finetune(theta0, labeled, unlabeled, config, TransductiveTerm::Entropy, nullptr, on_epoch);
}

// Cross-entropy only, on the same batch schedule as the transductive methods.
inline Parameters ce_finetune(const Parameters& theta0, const Dataset& labeled, const Matrix& unlabeled,
                              const TrainConfig& config, const EpochCallback& on_epoch = {}) {
  return finetune(theta0, labeled, unlabeled, config, TransductiveTerm::None, nullptr, on_epoch);
}

}  // namespace transboost
