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

// File formats: JSON checkpoints, JSON run reports and sweep grids, flat
// sweep CSV. Doubles are written in shortest round-trip form, so a value read
// back compares equal to the value written.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <unistd.h>

#include "json.hpp"
#include "transboost/error.hpp"
#include "transboost/eval.hpp"
#include "transboost/model.hpp"

namespace transboost {

using json = nlohmann::json;

// Writes to a sibling temporary file and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp.string() + "'");
    out << contents;
    out.flush();
    if (!out) throw IoError("failed writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// ---- checkpoints -----------------------------------------------------------

struct Checkpoint {
  Parameters params;
  std::uint64_t seed = 0;
  std::string tag;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

inline json checkpoint_to_json(const Checkpoint& ckpt) {
  const auto& p = ckpt.params;
  p.check_shape();
  p.check_finite();
  json weights = json::array();
  const auto shapes = block_shapes(p.arch, p.dims);
  for (std::size_t k = 0; k < shapes.size(); ++k) {
    const auto& block = p.weights[k];
    if (shapes[k].cols == 1) {
      weights.push_back(block);
      continue;
    }
    json rows = json::array();
    for (std::size_t r = 0; r < shapes[k].rows; ++r) {
      rows.push_back(std::vector<double>(block.begin() + static_cast<std::ptrdiff_t>(r * shapes[k].cols),
                                         block.begin() + static_cast<std::ptrdiff_t>((r + 1) * shapes[k].cols)));
    }
    weights.push_back(std::move(rows));
  }
  json j;
  j["arch"] = std::string(to_string(p.arch));
  j["dims"] = {{"d", p.dims.d}, {"h", p.dims.h}, {"c", p.dims.c}};
  j["weights"] = std::move(weights);
  j["seed"] = ckpt.seed;
  j["tag"] = ckpt.tag;
  return j;
}

inline Checkpoint checkpoint_from_json(const json& j) {
  try {
    Checkpoint ckpt;
    auto& p = ckpt.params;
    p.arch = parse_arch(j.at("arch").get<std::string>());
    const auto& dims = j.at("dims");
    p.dims = {dims.at("d").get<std::size_t>(), dims.at("h").get<std::size_t>(), dims.at("c").get<std::size_t>()};
    const auto shapes = block_shapes(p.arch, p.dims);
    const auto& weights = j.at("weights");
    if (!weights.is_array() || weights.size() != shapes.size()) throw ShapeError("checkpoint has wrong number of weight blocks");
    for (std::size_t k = 0; k < shapes.size(); ++k) {
      std::vector<double> block;
      if (shapes[k].cols == 1) {
        block = weights[k].get<std::vector<double>>();
      } else {
        if (weights[k].size() != shapes[k].rows) throw ShapeError(std::string("checkpoint block ") + shapes[k].name + " has wrong row count");
        for (const auto& row : weights[k]) {
          auto values = row.get<std::vector<double>>();
          if (values.size() != shapes[k].cols) throw ShapeError(std::string("checkpoint block ") + shapes[k].name + " has a ragged row");
          block.insert(block.end(), values.begin(), values.end());
        }
      }
      p.weights.push_back(std::move(block));
    }
    p.check_shape();
    p.check_finite();
    ckpt.seed = j.at("seed").get<std::uint64_t>();
    ckpt.tag = j.at("tag").get<std::string>();
    return ckpt;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed checkpoint: ") + e.what());
  }
}

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_file_atomic(path, checkpoint_to_json(ckpt).dump(2) + "\n");
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ParseError("checkpoint '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return checkpoint_from_json(j);
}

// ---- reports ---------------------------------------------------------------

namespace detail {

inline json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline json summary_json(const Summary& s) { return {{"mean", s.mean}, {"std", s.std}, {"count", s.count}}; }

inline std::string csv_number(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

}  // namespace detail

inline json to_json(const RunReport& r) {
  return {{"method", r.method},
          {"variant", r.variant},
          {"inductive_top1", r.inductive_top1},
          {"transductive_top1", r.transductive_top1},
          {"improvement", r.improvement},
          {"loss_before", detail::optional_number(r.loss_before)},
          {"loss_after", detail::optional_number(r.loss_after)},
          {"loss_rel_improvement", detail::optional_number(r.loss_rel_improvement)},
          {"heldout_inductive_top1", detail::optional_number(r.heldout_inductive_top1)},
          {"heldout_transductive_top1", detail::optional_number(r.heldout_transductive_top1)},
          {"train_fraction", r.train_fraction},
          {"test_fraction", r.test_fraction},
          {"labeled_count", r.labeled_count},
          {"unlabeled_count", r.unlabeled_count},
          {"seed", r.seed},
          {"wall_seconds", r.wall_seconds}};
}

inline json to_json(const ReportAggregate& a) {
  return {{"inductive_top1", detail::summary_json(a.inductive_top1)},
          {"transductive_top1", detail::summary_json(a.transductive_top1)},
          {"improvement", detail::summary_json(a.improvement)},
          {"loss_rel_improvement", detail::summary_json(a.loss_rel_improvement)},
          {"heldout_inductive_top1", detail::summary_json(a.heldout_inductive_top1)},
          {"heldout_transductive_top1", detail::summary_json(a.heldout_transductive_top1)}};
}

inline json to_json(const SweepGrid& g) {
  json runs = json::array();
  for (const auto& r : g.runs) runs.push_back(to_json(r));
  json cells = json::array();
  for (const auto& c : g.cells)
    cells.push_back({{"train_fraction", c.train_fraction}, {"test_fraction", c.test_fraction}, {"aggregate", to_json(c.aggregate)}});
  return {{"train_fractions", g.train_fractions}, {"test_fractions", g.test_fractions}, {"seeds", g.seeds},
          {"cells", std::move(cells)}, {"runs", std::move(runs)}};
}

inline json to_json(const AblationResult& a) {
  json variants = json::array();
  for (const auto& v : a.variants) {
    json runs = json::array();
    for (const auto& r : v.runs) runs.push_back(to_json(r));
    variants.push_back({{"variant", std::string(to_string(v.variant))},
                        {"seeds", a.seeds},
                        {"aggregate", to_json(v.aggregate)},
                        {"reference_improvement", v.reference_improvement},
                        {"runs", std::move(runs)}});
  }
  return {{"seeds", a.seeds}, {"variants", std::move(variants)}};
}

inline constexpr const char* kSweepCsvHeader =
    "train_fraction,test_fraction,seed,inductive_top1,transductive_top1,improvement,loss_rel_improvement";

// One row per run; contains no timing data, so reruns are byte-identical.
inline std::string sweep_csv(const SweepGrid& g) {
  std::string out = std::string(kSweepCsvHeader) + "\n";
  for (const auto& r : g.runs) {
    out += format_double(r.train_fraction) + "," + format_double(r.test_fraction) + "," + std::to_string(r.seed) + "," +
           format_double(r.inductive_top1) + "," + format_double(r.transductive_top1) + "," +
           format_double(r.improvement) + "," + detail::csv_number(r.loss_rel_improvement) + "\n";
  }
  return out;
}

inline std::string ablation_csv(const AblationResult& a) {
  std::string out = "variant,seed,inductive_top1,transductive_top1,improvement,loss_rel_improvement\n";
  for (const auto& v : a.variants) {
    for (const auto& r : v.runs) {
      out += std::string(to_string(v.variant)) + "," + std::to_string(r.seed) + "," + format_double(r.inductive_top1) +
             "," + format_double(r.transductive_top1) + "," + format_double(r.improvement) + "," +
             detail::csv_number(r.loss_rel_improvement) + "\n";
    }
  }
  return out;
}

}  // namespace transboost
