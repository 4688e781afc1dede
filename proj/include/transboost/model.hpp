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

// Reference softmax classifiers and their exact gradients.
//
// Two architectures are supported:
//   Linear: logits = W x + b                      blocks {W [C x D], b [C]}
//   Mlp1:   logits = W2 tanh(W1 x + b1) + b2      blocks {W1 [H x D], b1 [H], W2 [C x H], b2 [C]}
//
// Gradients are computed for any scalar loss expressed as a function of the
// softmax outputs of a list of inputs. The loss supplies its value and the
// partial derivatives with respect to each probability vector; the model
// chains those through the softmax Jacobian and back through the network.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "transboost/error.hpp"
#include "transboost/matrix.hpp"
#include "transboost/rng.hpp"

namespace transboost {

using Vector = std::vector<double>;

// Softmax output; entries in [0, 1] summing to 1.
using ProbVector = std::vector<double>;

inline constexpr double kLogEpsilon = 1e-12;

enum class Arch { Linear, Mlp1 };

inline std::string_view to_string(Arch arch) { return arch == Arch::Linear ? "linear" : "mlp1"; }

inline Arch parse_arch(std::string_view name) {
  if (name == "linear") return Arch::Linear;
  if (name == "mlp1") return Arch::Mlp1;
  throw InputError("unknown architecture '" + std::string(name) + "'");
}

struct Dims {
  std::size_t d = 0;  // input width
  std::size_t h = 0;  // hidden width (Mlp1 only)
  std::size_t c = 0;  // class count

  friend bool operator==(const Dims&, const Dims&) = default;
};

struct BlockShape {
  std::size_t rows;
  std::size_t cols;
  const char* name;

  std::size_t size() const { return rows * cols; }
};

inline std::vector<BlockShape> block_shapes(Arch arch, Dims dims) {
  if (arch == Arch::Linear) return {{dims.c, dims.d, "W"}, {dims.c, 1, "b"}};
  return {{dims.h, dims.d, "W1"}, {dims.h, 1, "b1"}, {dims.c, dims.h, "W2"}, {dims.c, 1, "b2"}};
}

// Row-major weight blocks in the order given by block_shapes().
using WeightBlocks = std::vector<std::vector<double>>;

inline WeightBlocks zero_blocks(Arch arch, Dims dims) {
  WeightBlocks blocks;
  for (const auto& shape : block_shapes(arch, dims)) blocks.emplace_back(shape.size(), 0.0);
  return blocks;
}

struct Parameters {
  Arch arch = Arch::Linear;
  Dims dims;
  WeightBlocks weights;

  static Parameters zeros(Arch arch, Dims dims) {
    Parameters p{arch, dims, zero_blocks(arch, dims)};
    p.check_shape();
    return p;
  }

  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& block : weights) n += block.size();
    return n;
  }

  void check_shape() const {
    if (dims.d == 0 || dims.c == 0 || (arch == Arch::Mlp1 && dims.h == 0))
      throw ShapeError("parameter dimensions must be positive");
    const auto shapes = block_shapes(arch, dims);
    if (weights.size() != shapes.size()) throw ShapeError("wrong number of weight blocks");
    for (std::size_t k = 0; k < shapes.size(); ++k) {
      if (weights[k].size() != shapes[k].size())
        throw ShapeError(std::string("block ") + shapes[k].name + " has wrong size");
    }
  }

  void check_finite() const {
    const auto shapes = block_shapes(arch, dims);
    for (std::size_t k = 0; k < weights.size(); ++k) {
      for (std::size_t i = 0; i < weights[k].size(); ++i) {
        if (!std::isfinite(weights[k][i]))
          throw NumericError(std::string("non-finite parameter in block ") + shapes[k].name + " at " +
                             std::to_string(i));
      }
    }
  }

  friend bool operator==(const Parameters&, const Parameters&) = default;
};

struct GradientSet {
  WeightBlocks blocks;

  static GradientSet zeros_like(const Parameters& params) { return {zero_blocks(params.arch, params.dims)}; }
};

// Uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out)); biases start at zero.
inline Parameters glorot_init(Arch arch, Dims dims, Rng& rng) {
  Parameters params = Parameters::zeros(arch, dims);
  const auto shapes = block_shapes(arch, dims);
  for (std::size_t k = 0; k < shapes.size(); ++k) {
    if (shapes[k].cols == 1) continue;
    const double a = std::sqrt(6.0 / static_cast<double>(shapes[k].rows + shapes[k].cols));
    for (double& w : params.weights[k]) w = rng.uniform(-a, a);
  }
  return params;
}

namespace detail {

// y = M x + bias, M row-major [rows x cols].
inline void affine(std::span<const double> m, std::span<const double> bias, std::span<const double> x,
                   std::span<double> y) {
  const std::size_t cols = x.size();
  for (std::size_t r = 0; r < y.size(); ++r) {
    double acc = bias[r];
    const double* row = m.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
    y[r] = acc;
  }
}

struct ForwardCache {
  Vector hidden;  // tanh activations (Mlp1 only)
  Vector logits;
};

inline ForwardCache forward_cached(const Parameters& params, std::span<const double> x) {
  if (x.size() != params.dims.d)
    throw ShapeError("input has width " + std::to_string(x.size()) + ", model expects " +
                     std::to_string(params.dims.d));
  ForwardCache cache;
  cache.logits.assign(params.dims.c, 0.0);
  if (params.arch == Arch::Linear) {
    affine(params.weights[0], params.weights[1], x, cache.logits);
  } else {
    cache.hidden.assign(params.dims.h, 0.0);
    affine(params.weights[0], params.weights[1], x, cache.hidden);
    for (double& v : cache.hidden) v = std::tanh(v);
    affine(params.weights[2], params.weights[3], cache.hidden, cache.logits);
  }
  return cache;
}

// Accumulates d(loss)/d(params) for one input given d(loss)/d(logits).
inline void backward(const Parameters& params, std::span<const double> x, const ForwardCache& cache,
                     std::span<const double> dlogits, GradientSet& grad) {
  auto outer_add = [](std::vector<double>& dm, std::span<const double> dy, std::span<const double> in) {
    const std::size_t cols = in.size();
    for (std::size_t r = 0; r < dy.size(); ++r) {
      if (dy[r] == 0.0) continue;
      double* row = dm.data() + r * cols;
      for (std::size_t c = 0; c < cols; ++c) row[c] += dy[r] * in[c];
    }
  };
  auto add = [](std::vector<double>& db, std::span<const double> dy) {
    for (std::size_t r = 0; r < dy.size(); ++r) db[r] += dy[r];
  };

  if (params.arch == Arch::Linear) {
    outer_add(grad.blocks[0], dlogits, x);
    add(grad.blocks[1], dlogits);
    return;
  }
  const std::size_t hdim = params.dims.h;
  const std::size_t cdim = params.dims.c;
  outer_add(grad.blocks[2], dlogits, cache.hidden);
  add(grad.blocks[3], dlogits);
  Vector dpre(hdim, 0.0);
  const auto& w2 = params.weights[2];
  for (std::size_t k = 0; k < cdim; ++k) {
    if (dlogits[k] == 0.0) continue;
    for (std::size_t j = 0; j < hdim; ++j) dpre[j] += w2[k * hdim + j] * dlogits[k];
  }
  for (std::size_t j = 0; j < hdim; ++j) dpre[j] *= 1.0 - cache.hidden[j] * cache.hidden[j];
  outer_add(grad.blocks[0], dpre, x);
  add(grad.blocks[1], dpre);
}

}  // namespace detail

inline Vector forward(const Parameters& params, std::span<const double> x) {
  return detail::forward_cached(params, x).logits;
}

inline ProbVector softmax(std::span<const double> logits) {
  ProbVector p(logits.begin(), logits.end());
  if (p.empty()) return p;
  const double top = *std::max_element(p.begin(), p.end());
  double total = 0.0;
  for (double& v : p) {
    v = std::exp(v - top);
    total += v;
  }
  for (double& v : p) v /= total;
  return p;
}

inline ProbVector predict_proba(const Parameters& params, std::span<const double> x) {
  return softmax(forward(params, x));
}

inline std::vector<ProbVector> predict_proba(const Parameters& params, const Matrix& x) {
  std::vector<ProbVector> out;
  out.reserve(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) out.push_back(predict_proba(params, x.row(i)));
  return out;
}

// Index of the largest entry; ties resolve to the lowest index.
inline std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < values.size(); ++k)
    if (values[k] > values[best]) best = k;
  return best;
}

inline std::size_t predict(const Parameters& params, std::span<const double> x) { return argmax(forward(params, x)); }

inline double cross_entropy(std::span<const double> p, std::size_t y) {
  if (y >= p.size())
    throw IndexError("label " + std::to_string(y) + " out of range for " + std::to_string(p.size()) + " classes");
  return -std::log(p[y] + kLogEpsilon);
}

inline bool is_prob_vector(std::span<const double> p, double tol = 1e-9) {
  double total = 0.0;
  for (double v : p) {
    if (!(v >= 0.0 && v <= 1.0)) return false;
    total += v;
  }
  return std::abs(total - 1.0) <= tol;
}

// A scalar loss over the probability vectors of a list of inputs, with the
// partial derivative of the loss with respect to each probability entry.
struct ProbLossGrad {
  double value = 0.0;
  std::vector<Vector> dprobs;  // same shape as the probability list
};

template <typename F>
concept ProbLoss = std::invocable<F, std::span<const ProbVector>> &&
                   std::convertible_to<std::invoke_result_t<F, std::span<const ProbVector>>, ProbLossGrad>;

struct ValueAndGrad {
  double value = 0.0;
  GradientSet grad;
};

// Exact gradient of loss(softmax(f(x_1)), ..., softmax(f(x_n))) with respect
// to every parameter. Per-input contributions are reduced in input order.
template <ProbLoss Loss>
ValueAndGrad value_and_grad(const Parameters& params, std::span<const std::span<const double>> inputs, Loss&& loss) {
  std::vector<detail::ForwardCache> caches;
  std::vector<ProbVector> probs;
  caches.reserve(inputs.size());
  probs.reserve(inputs.size());
  for (auto x : inputs) {
    caches.push_back(detail::forward_cached(params, x));
    probs.push_back(softmax(caches.back().logits));
  }

  ProbLossGrad lg = loss(std::span<const ProbVector>(probs));
  if (!std::isfinite(lg.value)) throw NumericError("loss value is not finite");
  if (lg.dprobs.size() != inputs.size()) throw ShapeError("loss gradient list does not match inputs");

  ValueAndGrad out{lg.value, GradientSet::zeros_like(params)};
  Vector dlogits(params.dims.c);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto& p = probs[i];
    const auto& g = lg.dprobs[i];
    // Softmax Jacobian-vector product: dz_k = p_k (g_k - <g, p>).
    double inner = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) inner += g[k] * p[k];
    bool any = false;
    for (std::size_t k = 0; k < p.size(); ++k) {
      dlogits[k] = p[k] * (g[k] - inner);
      any = any || dlogits[k] != 0.0;
    }
    if (any) detail::backward(params, inputs[i], caches[i], dlogits, out.grad);
  }

  const auto shapes = block_shapes(params.arch, params.dims);
  for (std::size_t k = 0; k < shapes.size(); ++k) {
    for (std::size_t i = 0; i < out.grad.blocks[k].size(); ++i) {
      if (!std::isfinite(out.grad.blocks[k][i]))
        throw NumericError(std::string("non-finite gradient in block ") + shapes[k].name + " at " +
                           std::to_string(i));
    }
  }
  return out;
}

}  // namespace transboost
