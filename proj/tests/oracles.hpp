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

// Reference implementations the library is checked against. Each one is
// written from the defining formula with no shared code beyond the
// parameter containers.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "transboost/transboost.hpp"

namespace oracle {

using transboost::Parameters;
using transboost::ProbVector;
using transboost::Rng;
using transboost::Variant;

// Flat Dirichlet(1) draw.
inline ProbVector random_prob(std::size_t c, Rng& rng) {
  ProbVector p(c);
  double total = 0.0;
  for (auto& v : p) {
    v = -std::log(1.0 - rng.uniform());
    total += v;
  }
  for (auto& v : p) v /= total;
  return p;
}

inline double sim(const ProbVector& p, const ProbVector& q, double eps) {
  double sq = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) sq += (p[k] - q[k]) * (p[k] - q[k]);
  return std::sqrt(2.0) - std::sqrt(sq + eps * eps);
}

// Exact pairwise loss by enumerating every ordered pair (i, j), i != j, and
// halving: each unordered pair is visited twice.
inline double exact_loss(const std::vector<ProbVector>& probs, const std::vector<std::size_t>& labels,
                         const std::vector<double>& conf, Variant variant, double eps = 1e-12) {
  double sep = 0.0, att = 0.0, n_sep = 0.0, n_att = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    for (std::size_t j = 0; j < probs.size(); ++j) {
      if (i == j) continue;
      const double w = conf[i] * conf[j];
      const double s = sim(probs[i], probs[j], eps);
      if (labels[i] != labels[j]) {
        sep += 0.5 * w * s;
        n_sep += 0.5;
      } else {
        att += 0.5 * w * (std::sqrt(2.0) - s);
        n_att += 0.5;
      }
    }
  }
  const double s_term = n_sep > 0 ? sep / n_sep : 0.0;
  const double a_term = n_att > 0 ? att / n_att : 0.0;
  switch (variant) {
    case Variant::Separate: return s_term;
    case Variant::Attract: return a_term;
    case Variant::Both: return s_term + a_term;
  }
  return 0.0;
}

// Minibatch estimate evaluated term by term for the pairs (i, perm[i]).
inline double minibatch_loss(const std::vector<ProbVector>& probs, const std::vector<std::size_t>& labels,
                             const std::vector<double>& conf, const std::vector<std::size_t>& perm, double eps = 1e-12) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const std::size_t j = perm[i];
    if (labels[i] == labels[j]) continue;
    num += conf[i] * conf[j] * sim(probs[i], probs[j], eps);
    den += 1.0;
  }
  return den == 0.0 ? 0.0 : num / den;
}

// Uniform derangement by rejection.
inline std::vector<std::size_t> derangement(std::size_t n, Rng& rng) {
  std::vector<std::size_t> perm(n);
  while (true) {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.index(i)]);
    bool fixed = false;
    for (std::size_t i = 0; i < n; ++i) fixed = fixed || perm[i] == i;
    if (!fixed) return perm;
  }
}

// Straight-line logits for either architecture.
inline std::vector<double> logits(const Parameters& p, const std::vector<double>& x) {
  const auto& d = p.dims;
  auto affine = [](const std::vector<double>& m, const std::vector<double>& b, const std::vector<double>& in,
                   std::size_t rows) {
    std::vector<double> out(rows);
    const std::size_t cols = in.size();
    for (std::size_t r = 0; r < rows; ++r) {
      double acc = b[r];
      for (std::size_t c = 0; c < cols; ++c) acc += m[r * cols + c] * in[c];
      out[r] = acc;
    }
    return out;
  };
  if (p.arch == transboost::Arch::Linear) return affine(p.weights[0], p.weights[1], x, d.c);
  auto h = affine(p.weights[0], p.weights[1], x, d.h);
  for (auto& v : h) v = std::tanh(v);
  return affine(p.weights[2], p.weights[3], h, d.c);
}

inline std::vector<double> softmax(const std::vector<double>& z) {
  std::vector<double> p(z.size());
  double total = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) total += std::exp(z[k]);
  for (std::size_t k = 0; k < z.size(); ++k) p[k] = std::exp(z[k]) / total;
  return p;
}

// Central finite differences of f over every parameter, step h.
inline transboost::WeightBlocks fd_gradient(const Parameters& params, const std::function<double(const Parameters&)>& f,
                                           double h = 1e-5) {
  transboost::WeightBlocks g = transboost::zero_blocks(params.arch, params.dims);
  Parameters work = params;
  for (std::size_t b = 0; b < work.weights.size(); ++b) {
    for (std::size_t i = 0; i < work.weights[b].size(); ++i) {
      const double orig = work.weights[b][i];
      work.weights[b][i] = orig + h;
      const double up = f(work);
      work.weights[b][i] = orig - h;
      const double down = f(work);
      work.weights[b][i] = orig;
      g[b][i] = (up - down) / (2.0 * h);
    }
  }
  return g;
}

// max |a - n| / max(|a|, |n|, floor) over all entries.
inline double max_relative_error(const transboost::WeightBlocks& a, const transboost::WeightBlocks& n,
                                 double floor = 1e-4) {
  double worst = 0.0;
  for (std::size_t b = 0; b < a.size(); ++b)
    for (std::size_t i = 0; i < a[b].size(); ++i) {
      const double scale = std::max({std::abs(a[b][i]), std::abs(n[b][i]), floor});
      worst = std::max(worst, std::abs(a[b][i] - n[b][i]) / scale);
    }
  return worst;
}

}  // namespace oracle
