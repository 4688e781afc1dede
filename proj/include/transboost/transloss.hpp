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

// Pairwise large-margin loss over test-set predictions.
//
// For a pair of test instances (i, j):
//   similarity  S(i, j)  = sqrt(2) - sqrt(|p_i - p_j|^2 + eps^2)
//   selection   delta    = 1 iff the frozen model assigns different labels
//   confidence  kappa_i  = max entry of the frozen model's softmax
//
// Separate: sum_{i<j} kappa_i kappa_j delta_ij S_ij / sum_{i<j} delta_ij
// Attract:  sum_{i<j} kappa_i kappa_j (1 - delta_ij) (sqrt(2) - S_ij) / sum_{i<j} (1 - delta_ij)
// Both:     Separate + Attract
//
// A term whose selected-pair count is zero contributes zero.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "transboost/error.hpp"
#include "transboost/model.hpp"

namespace transboost {

inline constexpr double kSqrt2 = std::numbers::sqrt2;

enum class Variant { Separate, Attract, Both };

inline std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::Separate: return "separate";
    case Variant::Attract: return "attract";
    case Variant::Both: return "both";
  }
  return "separate";
}

inline Variant parse_variant(std::string_view name) {
  if (name == "separate") return Variant::Separate;
  if (name == "attract") return Variant::Attract;
  if (name == "both") return Variant::Both;
  throw InputError("unknown loss variant '" + std::string(name) + "'");
}

struct TransLossConfig {
  double lambda = 2.0;
  Variant variant = Variant::Separate;
  double eps_norm = 1e-12;

  void validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InputError("lambda must be a finite nonnegative number");
    if (!(eps_norm > 0.0)) throw InputError("eps_norm must be positive");
  }
};

// Frozen pseudo-labels and confidences of the pretrained model on the test
// set. Built once before fine-tuning and never modified.
class Snapshot {
 public:
  Snapshot(std::vector<std::size_t> pseudo_labels, std::vector<double> confidences, std::string source_tag,
           std::size_t num_classes)
      : pseudo_labels_(std::move(pseudo_labels)),
        confidences_(std::move(confidences)),
        source_tag_(std::move(source_tag)) {
    if (pseudo_labels_.size() != confidences_.size())
      throw ShapeError("snapshot labels and confidences differ in length");
    for (std::size_t i = 0; i < pseudo_labels_.size(); ++i) {
      if (pseudo_labels_[i] >= num_classes) throw InputError("snapshot pseudo-label out of range");
      if (!(confidences_[i] > 0.0 && confidences_[i] <= 1.0))
        throw InputError("snapshot confidence outside (0, 1]");
    }
  }

  std::size_t size() const noexcept { return pseudo_labels_.size(); }
  std::span<const std::size_t> pseudo_labels() const noexcept { return pseudo_labels_; }
  std::span<const double> confidences() const noexcept { return confidences_; }
  const std::string& source_tag() const noexcept { return source_tag_; }

  friend bool operator==(const Snapshot&, const Snapshot&) = default;

 private:
  std::vector<std::size_t> pseudo_labels_;
  std::vector<double> confidences_;
  std::string source_tag_;
};

// Snapshot entries for the members of one unlabeled batch, in batch order.
struct SnapshotView {
  std::vector<std::size_t> pseudo_labels;
  std::vector<double> confidences;

  static SnapshotView of(const Snapshot& snap, std::span<const std::size_t> indices) {
    SnapshotView view;
    view.pseudo_labels.reserve(indices.size());
    view.confidences.reserve(indices.size());
    for (auto i : indices) {
      if (i >= snap.size()) throw IndexError("snapshot index out of range");
      view.pseudo_labels.push_back(snap.pseudo_labels()[i]);
      view.confidences.push_back(snap.confidences()[i]);
    }
    return view;
  }

  static SnapshotView of(const Snapshot& snap) {
    return {{snap.pseudo_labels().begin(), snap.pseudo_labels().end()},
            {snap.confidences().begin(), snap.confidences().end()}};
  }

  std::size_t size() const noexcept { return pseudo_labels.size(); }
};

inline double similarity(std::span<const double> p, std::span<const double> q, double eps_norm) {
  if (p.size() != q.size()) throw ShapeError("similarity of probability vectors with different lengths");
  double sq = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double d = p[k] - q[k];
    sq += d * d;
  }
  return kSqrt2 - std::sqrt(sq + eps_norm * eps_norm);
}

inline int delta(std::span<const std::size_t> pseudo_labels, std::size_t i, std::size_t j) {
  if (i >= pseudo_labels.size() || j >= pseudo_labels.size()) throw IndexError("delta index out of range");
  return pseudo_labels[i] != pseudo_labels[j] ? 1 : 0;
}

inline int delta(const Snapshot& snap, std::size_t i, std::size_t j) { return delta(snap.pseudo_labels(), i, j); }

inline double kappa(std::span<const double> probs_theta0) {
  double best = 0.0;
  for (double v : probs_theta0) best = std::max(best, v);
  return best;
}

namespace detail {

// Accumulates one pair term and its gradient into running sums.
//   separate=true:  w * S(p_i, p_j)
//   separate=false: w * (sqrt(2) - S(p_i, p_j))
inline double pair_term(std::span<const double> pi, std::span<const double> pj, double w, bool separate,
                        double eps_norm, Vector* gi, Vector* gj, double scale) {
  double sq = 0.0;
  for (std::size_t k = 0; k < pi.size(); ++k) {
    const double d = pi[k] - pj[k];
    sq += d * d;
  }
  const double r = std::sqrt(sq + eps_norm * eps_norm);
  if (gi != nullptr) {
    // d r / d p_i = (p_i - p_j) / r
    const double coef = (separate ? -w : w) * scale / r;
    for (std::size_t k = 0; k < pi.size(); ++k) {
      const double g = coef * (pi[k] - pj[k]);
      (*gi)[k] += g;
      (*gj)[k] -= g;
    }
  }
  return separate ? w * (kSqrt2 - r) : w * r;
}

struct PairSums {
  double separate = 0.0;
  double attract = 0.0;
  std::size_t separate_count = 0;
  std::size_t attract_count = 0;
};

inline double combine(const PairSums& sums, Variant variant) {
  const double sep = sums.separate_count > 0 ? sums.separate / static_cast<double>(sums.separate_count) : 0.0;
  const double att = sums.attract_count > 0 ? sums.attract / static_cast<double>(sums.attract_count) : 0.0;
  switch (variant) {
    case Variant::Separate: return sep;
    case Variant::Attract: return att;
    case Variant::Both: return sep + att;
  }
  return sep;
}

}  // namespace detail

struct ExactLoss {
  double value = 0.0;
  bool degenerate = false;  // fewer than two instances
};

// Full O(U^2) loss over every unordered pair of test instances.
inline ExactLoss exact_loss(std::span<const ProbVector> probs, const SnapshotView& snap, const TransLossConfig& config) {
  if (probs.size() != snap.size()) throw ShapeError("exact_loss: probabilities and snapshot differ in length");
  if (probs.size() < 2) return {0.0, true};
  const bool want_sep = config.variant != Variant::Attract;
  const bool want_att = config.variant != Variant::Separate;
  detail::PairSums sums;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    for (std::size_t j = i + 1; j < probs.size(); ++j) {
      const double w = snap.confidences[i] * snap.confidences[j];
      if (delta(snap.pseudo_labels, i, j) == 1) {
        ++sums.separate_count;
        if (want_sep) sums.separate += detail::pair_term(probs[i], probs[j], w, true, config.eps_norm, nullptr, nullptr, 0);
      } else {
        ++sums.attract_count;
        if (want_att) sums.attract += detail::pair_term(probs[i], probs[j], w, false, config.eps_norm, nullptr, nullptr, 0);
      }
    }
  }
  return {detail::combine(sums, config.variant), false};
}

inline ExactLoss exact_loss(std::span<const ProbVector> probs, const Snapshot& snap, const TransLossConfig& config) {
  return exact_loss(probs, SnapshotView::of(snap), config);
}

inline bool is_permutation_of_indices(std::span<const std::size_t> perm) {
  std::vector<bool> seen(perm.size(), false);
  for (auto v : perm) {
    if (v >= perm.size() || seen[v]) return false;
    seen[v] = true;
  }
  return true;
}

// Sampled-pair estimate over one unlabeled batch: pairs (i, perm[i]).
// Fixed points perm[i] == i are skipped; for Separate they carry delta = 0
// and would add nothing anyway.
inline ProbLossGrad minibatch_loss_grad(std::span<const ProbVector> batch_probs, const SnapshotView& snap,
                                        std::span<const std::size_t> perm, const TransLossConfig& config,
                                        bool with_grad = true) {
  const std::size_t n = batch_probs.size();
  if (snap.size() != n) throw ShapeError("minibatch_loss: probabilities and snapshot differ in length");
  if (perm.size() != n || !is_permutation_of_indices(perm))
    throw InputError("minibatch_loss: pairing is not a permutation of the batch");

  const bool want_sep = config.variant != Variant::Attract;
  const bool want_att = config.variant != Variant::Separate;
  detail::PairSums sums;
  for (std::size_t i = 0; i < n; ++i) {
    if (perm[i] == i) continue;
    if (snap.pseudo_labels[i] != snap.pseudo_labels[perm[i]])
      ++sums.separate_count;
    else
      ++sums.attract_count;
  }

  ProbLossGrad out;
  if (with_grad) {
    out.dprobs.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.dprobs[i].assign(batch_probs[i].size(), 0.0);
  }
  const double sep_scale = sums.separate_count > 0 ? 1.0 / static_cast<double>(sums.separate_count) : 0.0;
  const double att_scale = sums.attract_count > 0 ? 1.0 / static_cast<double>(sums.attract_count) : 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = perm[i];
    if (j == i) continue;
    const double w = snap.confidences[i] * snap.confidences[j];
    const bool selected = snap.pseudo_labels[i] != snap.pseudo_labels[j];
    if (selected && !want_sep) continue;
    if (!selected && !want_att) continue;
    Vector* gi = with_grad ? &out.dprobs[i] : nullptr;
    Vector* gj = with_grad ? &out.dprobs[j] : nullptr;
    const double scale = selected ? sep_scale : att_scale;
    const double term = detail::pair_term(batch_probs[i], batch_probs[j], w, selected, config.eps_norm, gi, gj, scale);
    (selected ? sums.separate : sums.attract) += term;
  }
  out.value = detail::combine(sums, config.variant);
  return out;
}

inline double minibatch_loss(std::span<const ProbVector> batch_probs, const SnapshotView& snap,
                             std::span<const std::size_t> perm, const TransLossConfig& config) {
  return minibatch_loss_grad(batch_probs, snap, perm, config, false).value;
}

// Mean cross-entropy over a labeled batch with its gradient.
inline ProbLossGrad mean_cross_entropy_grad(std::span<const ProbVector> probs, std::span<const std::size_t> labels) {
  if (probs.size() != labels.size()) throw ShapeError("cross-entropy: probabilities and labels differ in length");
  ProbLossGrad out;
  out.dprobs.resize(probs.size());
  if (probs.empty()) return out;
  const double inv = 1.0 / static_cast<double>(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    out.value += cross_entropy(probs[i], labels[i]);
    out.dprobs[i].assign(probs[i].size(), 0.0);
    out.dprobs[i][labels[i]] = -inv / (probs[i][labels[i]] + kLogEpsilon);
  }
  out.value *= inv;
  return out;
}

// Mean Shannon entropy (natural log) over a batch, the entropy-minimization
// baseline's transductive term.
inline ProbLossGrad mean_entropy_grad(std::span<const ProbVector> probs) {
  ProbLossGrad out;
  out.dprobs.resize(probs.size());
  if (probs.empty()) return out;
  const double inv = 1.0 / static_cast<double>(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    out.dprobs[i].resize(probs[i].size());
    for (std::size_t k = 0; k < probs[i].size(); ++k) {
      const double p = probs[i][k];
      const double lg = std::log(p + kLogEpsilon);
      out.value -= p * lg;
      out.dprobs[i][k] = -inv * (lg + p / (p + kLogEpsilon));
    }
  }
  out.value *= inv;
  return out;
}

inline double mean_entropy(std::span<const ProbVector> probs) { return mean_entropy_grad(probs).value; }

// Mean CE over the labeled batch plus lambda times the sampled-pair loss.
inline double combined_objective(std::span<const ProbVector> labeled_probs, std::span<const std::size_t> labels,
                                 std::span<const ProbVector> unlabeled_probs, const SnapshotView& snap,
                                 std::span<const std::size_t> perm, const TransLossConfig& config) {
  if (labeled_probs.empty()) throw InputError("combined objective needs at least one labeled example");
  double value = mean_cross_entropy_grad(labeled_probs, labels).value;
  if (config.lambda != 0.0) value += config.lambda * minibatch_loss(unlabeled_probs, snap, perm, config);
  return value;
}

}  // namespace transboost
