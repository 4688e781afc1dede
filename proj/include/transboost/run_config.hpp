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

// JSON run configuration. Every field has a default; parsing rejects unknown
// keys so typos fail loudly. to_json() emits the fully resolved config, and
// parse_run_config(to_json(c)) reproduces c.

#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "transboost/data.hpp"
#include "transboost/error.hpp"
#include "transboost/eval.hpp"
#include "transboost/trainer.hpp"

namespace transboost {

struct DatasetConfig {
  std::string kind = "blobs";  // blobs | rings | csv
  BlobsSpec blobs;
  RingsSpec rings;
  std::string csv_path;
  std::optional<std::size_t> csv_classes;
};

struct SweepConfig {
  std::vector<double> train_fractions{0.05, 0.10, 0.20, 1.0};
  std::vector<double> test_fractions{0.10, 0.25, 0.50, 1.0};
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
};

struct RunConfig {
  DatasetConfig dataset;
  ExperimentConfig experiment;
  SweepConfig sweep;
  std::vector<std::uint64_t> ablate_seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::uint64_t seed = 0;
  std::string out_dir = "runs/default";
  std::size_t jobs = 1;
};

namespace detail {

inline void check_keys(const nlohmann::json& j, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw InputError("config section '" + std::string(where) + "' must be an object");
  for (const auto& item : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || item.key() == a;
    if (!ok) throw InputError("unknown config key '" + std::string(where) + "." + item.key() + "'");
  }
}

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

inline nlohmann::json train_to_json(const TrainConfig& t, bool with_loss) {
  nlohmann::json j = {{"epochs", t.epochs}, {"labeled_batch", t.labeled_batch}, {"lr", t.lr},
                      {"momentum", t.momentum}, {"nesterov", t.nesterov}, {"weight_decay", t.weight_decay}};
  if (with_loss) {
    j["unlabeled_batch"] = t.unlabeled_batch;
    j["lambda"] = t.loss.lambda;
    j["variant"] = std::string(to_string(t.loss.variant));
    j["eps_norm"] = t.loss.eps_norm;
  }
  return j;
}

inline void train_from_json(const nlohmann::json& j, std::string_view where, TrainConfig& t, bool with_loss) {
  if (with_loss)
    check_keys(j, where, {"epochs", "labeled_batch", "unlabeled_batch", "lr", "momentum", "nesterov", "weight_decay",
                          "lambda", "variant", "eps_norm"});
  else
    check_keys(j, where, {"epochs", "labeled_batch", "lr", "momentum", "nesterov", "weight_decay"});
  read(j, "epochs", t.epochs);
  read(j, "labeled_batch", t.labeled_batch);
  read(j, "lr", t.lr);
  read(j, "momentum", t.momentum);
  read(j, "nesterov", t.nesterov);
  read(j, "weight_decay", t.weight_decay);
  if (with_loss) {
    read(j, "unlabeled_batch", t.unlabeled_batch);
    read(j, "lambda", t.loss.lambda);
    read(j, "eps_norm", t.loss.eps_norm);
    if (j.contains("variant")) t.loss.variant = parse_variant(j.at("variant").get<std::string>());
  }
  t.validate();
}

}  // namespace detail

inline nlohmann::json to_json(const RunConfig& c) {
  using nlohmann::json;
  json dataset = {{"kind", c.dataset.kind}};
  if (c.dataset.kind == "blobs") {
    const auto& b = c.dataset.blobs;
    dataset.update({{"classes", b.classes}, {"per_class", b.per_class}, {"dim", b.dim},
                    {"center_scale", b.center_scale}, {"noise_sigma", b.noise_sigma}, {"seed", b.seed}});
  } else if (c.dataset.kind == "rings") {
    const auto& r = c.dataset.rings;
    dataset.update({{"classes", r.classes}, {"per_class", r.per_class}, {"noise_sigma", r.noise_sigma}, {"seed", r.seed}});
  } else {
    dataset["path"] = c.dataset.csv_path;
    dataset["classes"] = c.dataset.csv_classes ? json(*c.dataset.csv_classes) : json(nullptr);
  }
  const auto& e = c.experiment;
  return {{"dataset", dataset},
          {"split", {{"train_fraction", e.split.train_fraction}, {"test_fraction", e.split.test_fraction},
                     {"test_share", e.split.test_share}, {"stratified", e.split.stratified}}},
          {"model", {{"arch", std::string(to_string(e.model.arch))}, {"hidden", e.model.hidden}}},
          {"pretrain", detail::train_to_json(e.pretrain, false)},
          {"finetune", detail::train_to_json(e.finetune, true)},
          {"method", std::string(to_string(e.method))},
          {"sweep", {{"train_fractions", c.sweep.train_fractions}, {"test_fractions", c.sweep.test_fractions},
                     {"seeds", c.sweep.seeds}}},
          {"ablate", {{"seeds", c.ablate_seeds}}},
          {"seed", c.seed},
          {"out", c.out_dir},
          {"jobs", c.jobs}};
}

inline RunConfig parse_run_config(const nlohmann::json& j) {
  using detail::check_keys;
  using detail::read;
  RunConfig c;
  try {
    check_keys(j, "<root>", {"dataset", "split", "model", "pretrain", "finetune", "method", "sweep", "ablate", "seed", "out", "jobs"});
    if (j.contains("dataset")) {
      const auto& d = j.at("dataset");
      read(d, "kind", c.dataset.kind);
      if (c.dataset.kind == "blobs") {
        check_keys(d, "dataset", {"kind", "classes", "per_class", "dim", "center_scale", "noise_sigma", "seed"});
        auto& b = c.dataset.blobs;
        read(d, "classes", b.classes);
        read(d, "per_class", b.per_class);
        read(d, "dim", b.dim);
        read(d, "center_scale", b.center_scale);
        read(d, "noise_sigma", b.noise_sigma);
        read(d, "seed", b.seed);
      } else if (c.dataset.kind == "rings") {
        check_keys(d, "dataset", {"kind", "classes", "per_class", "noise_sigma", "seed"});
        auto& r = c.dataset.rings;
        read(d, "classes", r.classes);
        read(d, "per_class", r.per_class);
        read(d, "noise_sigma", r.noise_sigma);
        read(d, "seed", r.seed);
      } else if (c.dataset.kind == "csv") {
        check_keys(d, "dataset", {"kind", "path", "classes"});
        c.dataset.csv_path = d.at("path").get<std::string>();
        if (d.contains("classes") && !d.at("classes").is_null()) c.dataset.csv_classes = d.at("classes").get<std::size_t>();
      } else {
        throw InputError("unknown dataset kind '" + c.dataset.kind + "'");
      }
    }
    auto& e = c.experiment;
    if (j.contains("split")) {
      const auto& s = j.at("split");
      check_keys(s, "split", {"train_fraction", "test_fraction", "test_share", "stratified"});
      read(s, "train_fraction", e.split.train_fraction);
      read(s, "test_fraction", e.split.test_fraction);
      read(s, "test_share", e.split.test_share);
      read(s, "stratified", e.split.stratified);
      e.split.validate();
    }
    if (j.contains("model")) {
      const auto& m = j.at("model");
      check_keys(m, "model", {"arch", "hidden"});
      if (m.contains("arch")) e.model.arch = parse_arch(m.at("arch").get<std::string>());
      read(m, "hidden", e.model.hidden);
    }
    if (j.contains("pretrain")) detail::train_from_json(j.at("pretrain"), "pretrain", e.pretrain, false);
    if (j.contains("finetune")) detail::train_from_json(j.at("finetune"), "finetune", e.finetune, true);
    if (j.contains("method")) e.method = parse_method(j.at("method").get<std::string>());
    if (j.contains("sweep")) {
      const auto& s = j.at("sweep");
      check_keys(s, "sweep", {"train_fractions", "test_fractions", "seeds"});
      read(s, "train_fractions", c.sweep.train_fractions);
      read(s, "test_fractions", c.sweep.test_fractions);
      read(s, "seeds", c.sweep.seeds);
    }
    if (j.contains("ablate")) {
      const auto& a = j.at("ablate");
      check_keys(a, "ablate", {"seeds"});
      read(a, "seeds", c.ablate_seeds);
    }
    read(j, "seed", c.seed);
    read(j, "out", c.out_dir);
    read(j, "jobs", c.jobs);
  } catch (const nlohmann::json::exception& ex) {
    throw InputError(std::string("invalid config: ") + ex.what());
  }
  return c;
}

inline Dataset load_dataset(const DatasetConfig& d) {
  if (d.kind == "blobs") return gen_blobs(d.blobs);
  if (d.kind == "rings") return gen_rings(d.rings);
  if (d.kind == "csv") return load_csv(d.csv_path, d.csv_classes);
  throw InputError("unknown dataset kind '" + d.kind + "'");
}

}  // namespace transboost
