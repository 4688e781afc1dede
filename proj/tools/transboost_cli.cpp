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

// transboost: command-line front end.
//
//   transboost pretrain   --config CFG [--seed N] [--out DIR]
//   transboost transboost --config CFG --checkpoint CKPT [--seed N] [--lambda L] [--out DIR]
//   transboost entmin     --config CFG --checkpoint CKPT [--seed N] [--lambda L] [--out DIR]
//   transboost sweep      --config CFG [--seed N] [--lambda L] [--out DIR] [--jobs N]
//   transboost ablate     --config CFG [--seed N] [--lambda L] [--out DIR] [--jobs N]
//
// Every command writes <out>/<command>.config.json, the fully resolved config.

#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "transboost/transboost.hpp"

namespace fs = std::filesystem;
using namespace transboost;

namespace {

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> lambda;
  std::optional<std::string> out;
  std::string checkpoint;
  std::optional<std::size_t> jobs;
};

RunConfig resolve(const Options& opt) {
  json raw;
  try {
    raw = json::parse(read_file(opt.config_path));
  } catch (const json::parse_error& e) {
    throw InputError("config '" + opt.config_path + "' is not valid JSON: " + e.what());
  }
  RunConfig cfg = parse_run_config(raw);
  if (opt.seed) cfg.seed = *opt.seed;
  if (opt.lambda) {
    cfg.experiment.finetune.loss.lambda = *opt.lambda;
    cfg.experiment.finetune.validate();
  }
  if (opt.out) cfg.out_dir = *opt.out;
  if (opt.jobs) cfg.jobs = *opt.jobs;
  return cfg;
}

void write_config(const RunConfig& cfg, const std::string& command) {
  write_file_atomic(fs::path(cfg.out_dir) / (command + ".config.json"), to_json(cfg).dump(2) + "\n");
}

// Collects epoch records as JSON lines.
struct EpochLog {
  std::string lines;

  EpochCallback callback(std::string phase) {
    return [this, phase = std::move(phase)](const EpochRecord& r) {
      json j = {{"phase", phase},
                {"epoch", r.epoch},
                {"cross_entropy", r.cross_entropy},
                {"transductive", r.transductive},
                {"wall_seconds", r.wall_seconds}};
      lines += j.dump() + "\n";
      log::debug(j.dump());
    };
  }
};

int cmd_pretrain(const RunConfig& cfg) {
  const Dataset data = load_dataset(cfg.dataset);
  SplitSpec split_spec = cfg.experiment.split;
  split_spec.seed = cfg.seed;
  const TransductiveSplit split = transductive_split(data, split_spec);
  TrainConfig pre = cfg.experiment.pretrain;
  pre.seed = cfg.seed;

  EpochLog elog;
  const Parameters params = pretrain(split.labeled, cfg.experiment.model, pre, elog.callback("pretrain"));
  const fs::path out(cfg.out_dir);
  write_config(cfg, "pretrain");
  save_checkpoint(out / "checkpoint.json",
                  {params, cfg.seed, "pretrain/" + cfg.dataset.kind + "/seed=" + std::to_string(cfg.seed)});
  write_file_atomic(out / "pretrain.log.jsonl", elog.lines);
  log::info("pretrained on " + std::to_string(split.labeled.size()) + " labeled examples; wrote " +
            (out / "checkpoint.json").string());
  return 0;
}

int cmd_finetune(const RunConfig& cfg, const std::string& checkpoint_path, Method method) {
  const std::string command(to_string(method));
  const Checkpoint ckpt = load_checkpoint(checkpoint_path);
  const Dataset data = load_dataset(cfg.dataset);
  if (ckpt.params.dims.d != data.dim() || ckpt.params.dims.c != data.num_classes)
    throw ShapeError("checkpoint dimensions do not match the configured dataset");
  if (ckpt.seed != cfg.seed)
    log::warn("checkpoint was pretrained with seed " + std::to_string(ckpt.seed) + " but this run uses seed " +
              std::to_string(cfg.seed) + "; the train/test split differs from pretraining");

  SplitSpec split_spec = cfg.experiment.split;
  split_spec.seed = cfg.seed;
  PreparedRun prep{transductive_split(data, split_spec), ckpt.params,
                   Snapshot({}, {}, ckpt.tag, ckpt.params.dims.c), cfg.seed};
  prep.snapshot = build_snapshot(prep.theta0, prep.split.unlabeled, ckpt.tag);

  const auto start = std::chrono::steady_clock::now();
  EpochLog elog;
  const Parameters theta = run_method(prep, cfg.experiment.finetune, method, elog.callback(command));
  RunReport report = evaluate_run(prep, theta, cfg.experiment.finetune, method, split_spec);
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const fs::path out(cfg.out_dir);
  write_config(cfg, command);
  std::string tag = command + "/from=" + ckpt.tag;
  if (method == Method::TransBoost) tag += "/variant=" + std::string(to_string(cfg.experiment.finetune.loss.variant));
  save_checkpoint(out / (command + ".checkpoint.json"), {theta, cfg.seed, tag});
  write_file_atomic(out / (command + ".report.json"),
                    json{{"report", to_json(report)}, {"config", to_json(cfg)}}.dump(2) + "\n");
  write_file_atomic(out / (command + ".log.jsonl"), elog.lines);
  log::info(command + ": inductive top-1 " + format_double(report.inductive_top1) + ", transductive top-1 " +
            format_double(report.transductive_top1) + ", improvement " + format_double(report.improvement) + " pp");
  return 0;
}

int cmd_sweep(RunConfig cfg, bool seed_overridden) {
  if (seed_overridden) cfg.sweep.seeds = {cfg.seed};
  const Dataset data = load_dataset(cfg.dataset);
  const SweepGrid grid =
      sweep(data, cfg.sweep.train_fractions, cfg.sweep.test_fractions, cfg.sweep.seeds, cfg.experiment, cfg.jobs);
  const fs::path out(cfg.out_dir);
  write_config(cfg, "sweep");
  write_file_atomic(out / "sweep.json", json{{"grid", to_json(grid)}, {"config", to_json(cfg)}}.dump(2) + "\n");
  write_file_atomic(out / "sweep.csv", sweep_csv(grid));
  log::info("sweep: " + std::to_string(grid.runs.size()) + " runs written to " + (out / "sweep.csv").string());
  return 0;
}

int cmd_ablate(RunConfig cfg, bool seed_overridden) {
  if (seed_overridden) cfg.ablate_seeds = {cfg.seed};
  const Dataset data = load_dataset(cfg.dataset);
  const AblationResult result = ablation(data, cfg.ablate_seeds, cfg.experiment, cfg.jobs);
  const fs::path out(cfg.out_dir);
  write_config(cfg, "ablate");
  write_file_atomic(out / "ablation.json", json{{"ablation", to_json(result)}, {"config", to_json(cfg)}}.dump(2) + "\n");
  write_file_atomic(out / "ablation.csv", ablation_csv(result));
  for (const auto& v : result.variants)
    log::info(std::string(to_string(v.variant)) + ": mean improvement " + format_double(v.aggregate.improvement.mean) +
              " pp (reference " + format_double(v.reference_improvement) + ")");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transductive fine-tuning laboratory"};
  app.require_subcommand(1);

  Options opt;
  auto add_common = [&](CLI::App* sub, bool finetune, bool pool) {
    sub->add_option("--config", opt.config_path, "Run configuration (JSON)")->required();
    sub->add_option("--seed", opt.seed, "Override the run seed");
    sub->add_option("--out", opt.out, "Override the output directory");
    if (finetune || pool) sub->add_option("--lambda", opt.lambda, "Override the transductive loss weight");
    if (finetune) sub->add_option("--checkpoint", opt.checkpoint, "Pretrained checkpoint (JSON)")->required();
    if (pool) sub->add_option("--jobs", opt.jobs, "Worker threads")->check(CLI::PositiveNumber);
  };
  auto* pre = app.add_subcommand("pretrain", "Pretrain a classifier on the labeled split");
  add_common(pre, false, false);
  auto* tb = app.add_subcommand("transboost", "Fine-tune a checkpoint on the test set with the pairwise loss");
  add_common(tb, true, false);
  auto* ent = app.add_subcommand("entmin", "Fine-tune a checkpoint with entropy minimization on the test set");
  add_common(ent, true, false);
  auto* sw = app.add_subcommand("sweep", "Train/test fraction sweep");
  add_common(sw, false, true);
  auto* ab = app.add_subcommand("ablate", "Compare the separate/attract/both loss variants");
  add_common(ab, false, true);

  CLI11_PARSE(app, argc, argv);

  try {
    const RunConfig cfg = resolve(opt);
    if (pre->parsed()) return cmd_pretrain(cfg);
    if (tb->parsed()) return cmd_finetune(cfg, opt.checkpoint, Method::TransBoost);
    if (ent->parsed()) return cmd_finetune(cfg, opt.checkpoint, Method::EntMin);
    if (sw->parsed()) return cmd_sweep(cfg, opt.seed.has_value());
    if (ab->parsed()) return cmd_ablate(cfg, opt.seed.has_value());
  } catch (const std::exception& e) {
    std::cerr << "transboost: error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
