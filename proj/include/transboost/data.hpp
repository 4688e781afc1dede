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

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "transboost/error.hpp"
#include "transboost/matrix.hpp"
#include "transboost/rng.hpp"

namespace transboost {

struct Dataset {
  Matrix features;
  std::optional<std::vector<std::size_t>> labels;
  std::size_t num_classes = 0;
  std::string name;

  std::size_t size() const noexcept { return features.rows(); }
  std::size_t dim() const noexcept { return features.cols(); }
  bool has_labels() const noexcept { return labels.has_value(); }

  void validate() const {
    for (double v : features.data())
      if (!std::isfinite(v)) throw InputError("dataset '" + name + "' has non-finite features");
    if (labels) {
      if (labels->size() != features.rows()) throw ShapeError("dataset '" + name + "' label count != row count");
      for (auto y : *labels)
        if (y >= num_classes) throw InputError("dataset '" + name + "' has a label outside [0, C)");
    }
  }

  Dataset subset(std::span<const std::size_t> indices, std::string subset_name) const {
    Dataset out{features.select_rows(indices), std::nullopt, num_classes, std::move(subset_name)};
    if (labels) {
      std::vector<std::size_t> ys;
      ys.reserve(indices.size());
      for (auto i : indices) ys.push_back((*labels)[i]);
      out.labels = std::move(ys);
    }
    return out;
  }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct BlobsSpec {
  std::size_t classes = 2;
  std::size_t per_class = 100;
  std::size_t dim = 2;
  double center_scale = 1.0;
  double noise_sigma = 1.0;
  std::uint64_t seed = 0;
};

// Isotropic Gaussian clusters. Centers are drawn once from N(0, center_scale^2 I);
// points are center + N(0, noise_sigma^2 I). Rows are grouped by class.
inline Dataset gen_blobs(const BlobsSpec& spec) {
  if (spec.classes < 2) throw InputError("blobs need at least 2 classes");
  if (spec.per_class < 1) throw InputError("blobs need at least 1 point per class");
  if (spec.dim < 2) throw InputError("blobs need dimension >= 2");
  if (!(spec.noise_sigma >= 0.0) || !(spec.center_scale >= 0.0)) throw InputError("blob scales must be nonnegative");

  Rng rng(spec.seed, Stream::Dataset);
  Matrix centers(spec.classes, spec.dim);
  for (std::size_t k = 0; k < spec.classes; ++k)
    for (std::size_t j = 0; j < spec.dim; ++j) centers(k, j) = rng.normal(0.0, spec.center_scale);

  const std::size_t n = spec.classes * spec.per_class;
  Dataset out{Matrix(n, spec.dim), std::vector<std::size_t>(n), spec.classes, "blobs"};
  std::size_t row = 0;
  for (std::size_t k = 0; k < spec.classes; ++k) {
    for (std::size_t i = 0; i < spec.per_class; ++i, ++row) {
      for (std::size_t j = 0; j < spec.dim; ++j) out.features(row, j) = centers(k, j) + rng.normal(0.0, spec.noise_sigma);
      (*out.labels)[row] = k;
    }
  }
  return out;
}

struct RingsSpec {
  std::size_t classes = 2;
  std::size_t per_class = 100;
  double noise_sigma = 0.1;
  std::uint64_t seed = 0;
};

// Concentric circles in the plane: class k lies on radius k + 1 at a uniform
// angle, then both coordinates receive N(0, noise_sigma^2) noise.
inline Dataset gen_rings(const RingsSpec& spec) {
  if (spec.classes < 2) throw InputError("rings need at least 2 classes");
  if (spec.per_class < 1) throw InputError("rings need at least 1 point per class");
  if (!(spec.noise_sigma >= 0.0)) throw InputError("ring noise must be nonnegative");

  Rng rng(spec.seed, Stream::Dataset);
  const std::size_t n = spec.classes * spec.per_class;
  Dataset out{Matrix(n, 2), std::vector<std::size_t>(n), spec.classes, "rings"};
  std::size_t row = 0;
  for (std::size_t k = 0; k < spec.classes; ++k) {
    const double radius = static_cast<double>(k + 1);
    for (std::size_t i = 0; i < spec.per_class; ++i, ++row) {
      const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
      out.features(row, 0) = radius * std::cos(angle) + rng.normal(0.0, spec.noise_sigma);
      out.features(row, 1) = radius * std::sin(angle) + rng.normal(0.0, spec.noise_sigma);
      (*out.labels)[row] = k;
    }
  }
  return out;
}

namespace detail {

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    cells.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace detail

// Reads a header-first CSV with feature columns f0..f{D-1} (any order) and an
// optional integer "label" column. Labels are all-or-nothing: every cell empty
// yields an unlabeled dataset. C is max label + 1 unless num_classes is given.
inline Dataset load_csv(const std::string& path, std::optional<std::size_t> num_classes = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open CSV file '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw ParseError("CSV file '" + path + "' is empty (header row required)");
  const auto header = detail::split_csv_line(detail::trim(line));
  std::vector<std::size_t> feature_col_of;  // feature index -> column
  std::optional<std::size_t> label_col;
  {
    std::vector<std::pair<std::size_t, std::size_t>> found;  // (feature index, column)
    for (std::size_t c = 0; c < header.size(); ++c) {
      const auto name = detail::trim(header[c]);
      if (name == "label") {
        if (label_col) throw ParseError("duplicate 'label' column in header");
        label_col = c;
        continue;
      }
      std::size_t k = 0;
      const auto* first = name.data() + 1;
      const auto* last = name.data() + name.size();
      if (name.size() < 2 || name[0] != 'f' || std::from_chars(first, last, k).ptr != last)
        throw ParseError("unexpected header column '" + std::string(name) + "'");
      found.emplace_back(k, c);
    }
    std::sort(found.begin(), found.end());
    for (std::size_t k = 0; k < found.size(); ++k) {
      if (found[k].first != k) throw ParseError("feature columns must be f0..f{D-1} without gaps");
      feature_col_of.push_back(found[k].second);
    }
    if (feature_col_of.empty()) throw ParseError("CSV header has no feature columns");
  }

  const std::size_t width = header.size();
  const std::size_t dim = feature_col_of.size();
  std::vector<double> values;
  std::vector<std::optional<std::size_t>> raw_labels;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    const auto trimmed = detail::trim(line);
    if (trimmed.empty()) continue;
    ++row;
    const auto cells = detail::split_csv_line(trimmed);
    if (cells.size() != width)
      throw ParseError("expected " + std::to_string(width) + " cells, found " + std::to_string(cells.size()), row);
    for (std::size_t k = 0; k < dim; ++k) {
      const auto cell = detail::trim(cells[feature_col_of[k]]);
      double v = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || res.ec != std::errc() || res.ptr != cell.data() + cell.size() || !std::isfinite(v))
        throw ParseError("non-numeric value '" + std::string(cell) + "' in column f" + std::to_string(k), row);
      values.push_back(v);
    }
    if (label_col) {
      const auto cell = detail::trim(cells[*label_col]);
      if (cell.empty()) {
        raw_labels.emplace_back(std::nullopt);
      } else {
        std::size_t y = 0;
        const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), y);
        if (res.ec != std::errc() || res.ptr != cell.data() + cell.size())
          throw ParseError("label '" + std::string(cell) + "' is not a nonnegative integer", row);
        raw_labels.emplace_back(y);
      }
    }
  }

  Dataset out{Matrix(row, dim, std::move(values)), std::nullopt, 0, path};
  std::size_t max_label = 0;
  if (label_col && row > 0) {
    const bool first_present = raw_labels.front().has_value();
    std::vector<std::size_t> labels;
    for (std::size_t r = 0; r < raw_labels.size(); ++r) {
      if (raw_labels[r].has_value() != first_present)
        throw ParseError("mixed labeled and unlabeled rows", r + 1);
      if (first_present) {
        labels.push_back(*raw_labels[r]);
        max_label = std::max(max_label, *raw_labels[r]);
      }
    }
    if (first_present) out.labels = std::move(labels);
  }
  if (num_classes) {
    out.num_classes = *num_classes;
  } else {
    out.num_classes = out.labels ? max_label + 1 : 0;
  }
  out.validate();
  return out;
}

struct SplitSpec {
  double train_fraction = 1.0;
  double test_fraction = 1.0;
  bool stratified = true;
  std::uint64_t seed = 0;
  // Share of the dataset placed in the test pool before subsampling.
  double test_share = 0.5;

  void validate() const {
    auto in_unit = [](double f) { return f > 0.0 && f <= 1.0; };
    if (!in_unit(train_fraction) || !in_unit(test_fraction)) throw InputError("split fractions must lie in (0, 1]");
    if (!(test_share > 0.0 && test_share < 1.0)) throw InputError("test_share must lie in (0, 1)");
  }
};

// Test-set ground truth. Readable only by the evaluation code (see eval.hpp);
// the trainer's interfaces take features and snapshots, never this type.
class HiddenLabels {
 public:
  HiddenLabels() = default;
  explicit HiddenLabels(std::vector<std::size_t> labels) : labels_(std::move(labels)) {}

  std::size_t size() const noexcept { return labels_.size(); }

 private:
  friend struct EvalAccess;
  std::vector<std::size_t> labels_;
};

struct TransductiveSplit {
  Dataset labeled;     // training sample, with labels
  Matrix unlabeled;    // test instances handed to the learner
  HiddenLabels truth;  // their labels, sequestered for evaluation
  Dataset heldout;     // test-pool instances not drawn at this test fraction
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
  std::vector<std::size_t> heldout_indices;
};

namespace detail {

inline std::size_t fraction_count(double fraction, std::size_t n) {
  return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
}

// Splits `order` into a prefix of `take` indices and the rest.
inline void take_prefix(const std::vector<std::size_t>& order, std::size_t take, std::vector<std::size_t>& head,
                        std::vector<std::size_t>& tail) {
  head.insert(head.end(), order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take));
  tail.insert(tail.end(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end());
}

}  // namespace detail

// Partitions into disjoint train/test pools, then keeps train_fraction of the
// train pool and test_fraction of the test pool. Subsets are shuffled-order
// prefixes, so smaller fractions nest inside larger ones for a fixed seed.
inline TransductiveSplit transductive_split(const Dataset& d, const SplitSpec& spec) {
  spec.validate();
  if (!d.labels) throw InputError("transductive split needs a labeled dataset");
  Rng rng(spec.seed, Stream::Split);

  std::vector<std::vector<std::size_t>> groups;
  if (spec.stratified) {
    groups.resize(d.num_classes);
    for (std::size_t i = 0; i < d.size(); ++i) groups[(*d.labels)[i]].push_back(i);
  } else {
    groups.emplace_back(d.size());
    std::iota(groups[0].begin(), groups[0].end(), std::size_t{0});
  }

  std::vector<std::size_t> train, test, heldout, unused;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    auto& members = groups[g];
    if (members.empty()) continue;
    shuffle(std::span<std::size_t>(members), rng);
    const std::string what = spec.stratified ? "class " + std::to_string(g) : "the dataset";
    const std::size_t n_test = detail::fraction_count(spec.test_share, members.size());
    if (n_test == 0 || n_test == members.size())
      throw InputError("test_share leaves " + what + " without train or test examples");
    std::vector<std::size_t> test_pool(members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_test));
    std::vector<std::size_t> train_pool(members.begin() + static_cast<std::ptrdiff_t>(n_test), members.end());

    const std::size_t n_train = detail::fraction_count(spec.train_fraction, train_pool.size());
    const std::size_t n_test_kept = detail::fraction_count(spec.test_fraction, test_pool.size());
    if (n_train < 1) throw InputError("train_fraction yields no examples of " + what);
    if (n_test_kept < 1) throw InputError("test_fraction yields no examples of " + what);
    detail::take_prefix(train_pool, n_train, train, unused);
    detail::take_prefix(test_pool, n_test_kept, test, heldout);
  }
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  std::sort(heldout.begin(), heldout.end());

  TransductiveSplit out;
  out.labeled = d.subset(train, d.name + ":train");
  Dataset test_set = d.subset(test, d.name + ":test");
  out.unlabeled = std::move(test_set.features);
  out.truth = HiddenLabels(std::move(*test_set.labels));
  out.heldout = d.subset(heldout, d.name + ":heldout");
  out.train_indices = std::move(train);
  out.test_indices = std::move(test);
  out.heldout_indices = std::move(heldout);
  return out;
}

}  // namespace transboost
