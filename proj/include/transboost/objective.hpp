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

#include <cmath>
#include <span>
#include <vector>

#include "transboost/error.hpp"
#include "transboost/model.hpp"
#include "transboost/transloss.hpp"

namespace transboost {

enum class TransductiveTerm {
  None,        // labeled cross-entropy only
  TransBoost,  // sampled-pair loss over the unlabeled batch
  Entropy,     // mean Shannon entropy over the unlabeled batch
};

// One optimization step's loss: mean CE over the labeled batch (if any) plus
// loss.lambda times the transductive term over the unlabeled batch.
struct BatchObjective {
  std::vector<std::span<const double>> labeled_x;
  std::vector<std::size_t> labels;
  std::vector<std::span<const double>> unlabeled_x;
  SnapshotView snapshot;            // TransBoost term only
  std::vector<std::size_t> pairing;  // TransBoost term only; permutation of the unlabeled batch
  TransductiveTerm term = TransductiveTerm::TransBoost;
  TransLossConfig loss;
};

struct ObjectiveValue {
  double cross_entropy = 0.0;
  double transductive = 0.0;
  double total = 0.0;
};

struct ObjectiveGrad {
  ObjectiveValue value;
  GradientSet grad;
};

namespace detail {

inline bool uses_unlabeled(const BatchObjective& obj) {
  return obj.term != TransductiveTerm::None && obj.loss.lambda != 0.0 && !obj.unlabeled_x.empty();
}

}  // namespace detail

// Exact gradient of the batch objective. The snapshot's confidences and
// pseudo-labels are constants; gradient flows through the current model's
// probabilities of both members of every sampled pair.
inline ObjectiveGrad objective_grad(const Parameters& params, const BatchObjective& obj) {
  const bool with_unlabeled = detail::uses_unlabeled(obj);
  const std::size_t nl = obj.labeled_x.size();
  if (obj.labels.size() != nl) throw ShapeError("labeled batch and labels differ in length");

  std::vector<std::span<const double>> inputs(obj.labeled_x.begin(), obj.labeled_x.end());
  if (with_unlabeled) inputs.insert(inputs.end(), obj.unlabeled_x.begin(), obj.unlabeled_x.end());

  ObjectiveValue parts;
  auto loss = [&](std::span<const ProbVector> probs) {
    ProbLossGrad out;
    out.dprobs.resize(probs.size());
    auto labeled = probs.subspan(0, nl);
    if (nl > 0) {
      ProbLossGrad ce = mean_cross_entropy_grad(labeled, obj.labels);
      if (!std::isfinite(ce.value)) throw NumericError("cross-entropy term is not finite");
      parts.cross_entropy = ce.value;
      for (std::size_t i = 0; i < nl; ++i) out.dprobs[i] = std::move(ce.dprobs[i]);
    }
    if (with_unlabeled) {
      auto unlabeled = probs.subspan(nl);
      ProbLossGrad t = obj.term == TransductiveTerm::TransBoost
                           ? minibatch_loss_grad(unlabeled, obj.snapshot, obj.pairing, obj.loss)
                           : mean_entropy_grad(unlabeled);
      if (!std::isfinite(t.value))
        throw NumericError(obj.term == TransductiveTerm::TransBoost ? "transductive pair term is not finite"
                                                                   : "entropy term is not finite");
      parts.transductive = t.value;
      for (std::size_t i = 0; i < t.dprobs.size(); ++i) {
        for (double& g : t.dprobs[i]) g *= obj.loss.lambda;
        out.dprobs[nl + i] = std::move(t.dprobs[i]);
      }
    }
    parts.total = parts.cross_entropy + (with_unlabeled ? obj.loss.lambda * parts.transductive : 0.0);
    out.value = parts.total;
    return out;
  };

  ValueAndGrad vg = value_and_grad(params, std::span<const std::span<const double>>(inputs), loss);
  return {parts, std::move(vg.grad)};
}

// Objective value only (used by finite-difference checks and logging).
inline ObjectiveValue objective_value(const Parameters& params, const BatchObjective& obj) {
  const bool with_unlabeled = detail::uses_unlabeled(obj);
  ObjectiveValue parts;
  if (!obj.labeled_x.empty()) {
    std::vector<ProbVector> probs;
    for (auto x : obj.labeled_x) probs.push_back(predict_proba(params, x));
    double ce = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) ce += cross_entropy(probs[i], obj.labels[i]);
    parts.cross_entropy = ce / static_cast<double>(probs.size());
  }
  if (with_unlabeled) {
    std::vector<ProbVector> probs;
    for (auto x : obj.unlabeled_x) probs.push_back(predict_proba(params, x));
    parts.transductive = obj.term == TransductiveTerm::TransBoost
                             ? minibatch_loss(probs, obj.snapshot, obj.pairing, obj.loss)
                             : mean_entropy(probs);
  }
  parts.total = parts.cross_entropy + (with_unlabeled ? obj.loss.lambda * parts.transductive : 0.0);
  return parts;
}

}  // namespace transboost
